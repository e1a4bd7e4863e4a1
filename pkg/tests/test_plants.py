import numpy as np
import pytest

from ltvadapt import linalg, plants


def test_nominal_pair():
    p = plants.ConstantLti()
    a, b = p.eval(17)
    assert np.array_equal(a, [[1.1, 0.1], [0.1, 0.2]])
    assert np.array_equal(b, [[0.5, 1.0], [0.1, 0.2]])


def test_switching_schedule():
    p = plants.SwitchingPlant(p=12, ell=1.0)
    # block 1 covers k in [1, 12] with the nominal input matrix
    _, b1 = p.eval(1)
    _, b12 = p.eval(12)
    assert np.array_equal(b1, [[0.5, 1.0], [0.1, 0.2]])
    assert np.array_equal(b12, b1)
    # block 2 covers [13, 24] with the alternate matrix
    _, b13 = p.eval(13)
    assert np.array_equal(b13, [[0.5, -1.0], [0.1, -0.2]])
    _, b25 = p.eval(25)
    assert np.array_equal(b25, b1)
    # k <= 0 is nominal
    _, b0 = p.eval(0)
    assert np.array_equal(b0, b1)


def test_switching_ell_scales_alternate_column():
    p = plants.SwitchingPlant(p=12, ell=2.5)
    _, b = p.eval(13)
    assert np.allclose(b, [[0.5, -2.5], [0.1, -0.5]])


def test_sinusoidal_at_zero():
    # cos(0) = 1: A = A0 (I + 0.8 diag(1, -1)) = A0 diag(1.8, 0.2)
    p = plants.SinusoidalPlant(p=10, delta_a=0.8)
    a, b = p.eval(0)
    assert np.allclose(a, [[1.98, 0.02], [0.18, 0.04]], atol=1e-12)
    assert np.array_equal(b, [[0.5, 1.0], [0.1, 0.2]])


def test_sinusoidal_periodicity():
    p = plants.SinusoidalPlant(p=10)
    a0, _ = p.eval(3)
    a1, _ = p.eval(13)
    assert np.allclose(a0, a1, atol=1e-12)


def test_vanishing_perturbation():
    p = plants.VanishingPerturbationPlant(p=10, t_delta=30)
    a_end, _ = p.eval(30)
    a_nominal, _ = plants.ConstantLti().eval(0)
    assert np.allclose(a_end, a_nominal, atol=1e-12)
    a_mid, _ = p.eval(15)
    assert not np.allclose(a_mid, a_nominal)


def test_step_matches_eval():
    p = plants.SwitchingPlant()
    x = np.array([1.0, -1.0])
    u = np.array([0.5, 0.2])
    a, b = p.eval(14)
    assert np.allclose(p.step(14, x, u), a @ x + b @ u)


def test_stacked_alignment():
    p = plants.SwitchingPlant()
    st = p.stacked(14, 3)
    # columns cover steps 11, 12, 13
    a13, _ = p.eval(13)
    assert np.array_equal(st.calA[:, 4:6], a13)


def test_piecewise_file_plant(tmp_path):
    path = tmp_path / "plant.txt"
    path.write_text(
        "1 1 2 hold\n"
        "0 0.5 1.0\n"
        "10 0.9 1.0\n"
    )
    p = plants.PiecewiseFilePlant(str(path))
    a, b = p.eval(3)
    assert a[0, 0] == 0.5 and b[0, 0] == 1.0
    a, _ = p.eval(10)
    assert a[0, 0] == 0.9


def test_piecewise_file_linear(tmp_path):
    path = tmp_path / "plant.txt"
    path.write_text(
        "1 1 2 linear\n"
        "0 0.0 1.0\n"
        "10 1.0 1.0\n"
    )
    p = plants.PiecewiseFilePlant(str(path))
    a, _ = p.eval(5)
    assert abs(a[0, 0] - 0.5) < 1e-12


def test_make_plant_factory():
    p = plants.make_plant("switching", {"p": 12, "ell": 2.5})
    assert isinstance(p, plants.SwitchingPlant)
    with pytest.raises(linalg.InvalidInput):
        plants.make_plant("no-such-kind", {})
