import numpy as np
import pytest

from ltvadapt import hybrid, linalg, plants


def run_switching(mode="event", seed=53, **kw):
    cfg = hybrid.ScenarioConfig(mode=mode, horizon=100, seed=seed, **kw)
    return hybrid.run(plants.SwitchingPlant(), cfg)


def test_sigma_rule():
    assert abs(hybrid.sigma(0.8) - 0.98) < 1e-15
    assert hybrid.sigma(1.0) == 1.0
    assert abs(hybrid.sigma(0.0, c_sigma=1.0)) < 1e-15
    with pytest.raises(linalg.InvalidInput):
        hybrid.sigma(1.2)
    with pytest.raises(linalg.InvalidInput):
        hybrid.sigma(0.5, c_sigma=0.0)


def test_config_validation():
    plant = plants.ConstantLti()
    with pytest.raises(linalg.InvalidInput):
        hybrid.ScenarioConfig(horizon=2, T=4).validate(plant)
    with pytest.raises(linalg.InvalidInput):
        hybrid.ScenarioConfig(eps_F=1.5).validate(plant)
    with pytest.raises(linalg.InvalidInput):
        hybrid.ScenarioConfig(mode="time", n_p=0).validate(plant)
    assert hybrid.ScenarioConfig().validate(plant) == 4


def test_exploration_protocol():
    # the first T inputs come straight from the seeded generator
    traj = run_switching(seed=53)
    rng = np.random.default_rng(53)
    for r in traj.records[:4]:
        assert np.array_equal(r.u, rng.uniform(-1.0, 1.0, 2))
    # first synthesis exactly at k = T
    assert traj.episodes[0].k == 4
    assert traj.monitor_start == 4


def test_records_one_per_step():
    traj = run_switching()
    ks = [r.k for r in traj.records]
    assert ks == list(range(len(ks)))


def test_toggle_zero_exactly_after_episodes():
    traj = run_switching()
    episode_ks = {e.k for e in traj.episodes}
    for r in traj.records:
        assert (r.tau == 0) == (r.k in episode_ks)


def test_event_mode_converges_and_triggers_after_switch():
    traj = run_switching(seed=53)
    n = traj.state_norms()
    assert traj.status == hybrid.COMPLETED
    assert n[80:].max() <= 1e-2 * n.max()
    # first plant switch happens at k = 13
    assert any(13 <= e.k <= 16 for e in traj.episodes)


def test_fixed_mode_never_triggers():
    traj = run_switching(mode="fixed", seed=1)
    assert all(not r.trigger for r in traj.records)
    assert traj.num_episodes == 1  # only the forced initial design


def test_fixed_mode_divergence_flag():
    cfg = hybrid.ScenarioConfig(mode="fixed", horizon=100, seed=1)
    traj = hybrid.run(plants.SwitchingPlant(ell=2.5), cfg)
    assert traj.status == hybrid.DIVERGED
    # halts before the horizon
    assert traj.records[-1].k < 100
    assert float(np.linalg.norm(traj.records[-1].x)) > hybrid.DIVERGENCE_NORM


def test_time_mode_triggers_on_schedule():
    traj = run_switching(mode="time", seed=0, n_p=12)
    trigger_ks = [r.k for r in traj.records if r.trigger]
    assert trigger_ks == [k for k in range(4, 100) if (k - 4) % 12 == 0]


def test_time_mode_adopts_after_excitation():
    traj = run_switching(mode="time", seed=0, n_p=12)
    # a jump following a scheduled trigger happens T steps later
    for e in traj.episodes[1:]:
        assert (e.k - 4 - 4) % 12 == 0


def test_jump_preserves_state():
    traj = run_switching(seed=53)
    for e in traj.episodes[1:]:
        rec = next(r for r in traj.records if r.k == e.k)
        prev = next(r for r in traj.records if r.k == e.k - 1)
        a_mat, b_mat = plants.SwitchingPlant().eval(prev.kappa)
        assert np.allclose(rec.x, a_mat @ prev.x + b_mat @ prev.u)


def test_determinism():
    t1 = run_switching(seed=53)
    t2 = run_switching(seed=53)
    assert np.array_equal(t1.state_norms(), t2.state_norms())
    assert [e.k for e in t1.episodes] == [e.k for e in t2.episodes]


def test_trajectory_csv(tmp_path):
    traj = run_switching(seed=53)
    path = tmp_path / "traj.csv"
    hybrid.write_trajectory_csv(traj, str(path), 2, 2)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == ("k,j,x_1,x_2,u_1,u_2,V,sigma_a1,a1,trigger,"
                        "synth_feasible,kappa")
    assert len(lines) == len(traj.records) + 1
