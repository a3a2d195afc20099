import numpy as np
import pytest

from circlab import CircleDiffusionModel, SimulationConfig, simulate_batch, simulate_first_cycle, simulate_path
from circlab import rng as streams
from circlab.simulation import (
    BatchError,
    Censored,
    FirstCycle,
    convergence_study,
    dump_paths,
    first_cycle_arrays,
    load_paths,
    ordered_map,
    simulate_cycles,
)


def test_near_deterministic_drift():
    model = CircleDiffusionModel.constant(1.0, 1e-6)
    p = simulate_path(model, SimulationConfig(step_size=1e-3, horizon=1.0), 0)
    assert abs(p.positions[-1] - 1.0) <= 1e-3
    assert p.times[-1] == 1.0


def test_zero_horizon_returns_start(zero_model):
    p = simulate_path(zero_model, SimulationConfig(horizon=0.0, start_point=0.25), 0)
    assert p.times.tolist() == [0.0]
    assert p.positions.tolist() == [0.25]


def test_last_step_lands_on_horizon(zero_model):
    p = simulate_path(zero_model, SimulationConfig(step_size=0.03, horizon=1.0), 0)
    assert p.times[-1] == 1.0
    assert np.all(np.diff(p.times) > 0)
    assert np.diff(p.times).max() <= 0.03 + 1e-15


def test_brownian_variance(zero_model):
    cfg = SimulationConfig(step_size=0.01, horizon=1.0, n_paths=100_000, master_seed=11)
    runs = simulate_batch(zero_model, cfg, kind="cycles")
    disp = np.array([r.end - r.start for r in runs])
    assert 0.97 <= disp.var(ddof=1) <= 1.03


def test_first_cycle_deterministic_limit():
    model = CircleDiffusionModel.constant(1.0, 1e-6)
    r = simulate_first_cycle(model, SimulationConfig(step_size=1e-4), 0)
    assert isinstance(r, FirstCycle)
    assert r.sign == 1
    assert r.T == pytest.approx(1.0, abs=1e-3)


def test_first_cycle_sign_symmetry(zero_model):
    cfg = SimulationConfig(step_size=1e-2, n_paths=100_000, master_seed=5)
    _, sign, censored = first_cycle_arrays(simulate_batch(zero_model, cfg, kind="first_cycle"))
    assert censored == 0
    frac = (sign > 0).mean()
    assert abs(frac - 0.5) <= 3 * np.sqrt(0.25 / sign.size)


def test_censoring(zero_model):
    cfg = SimulationConfig(step_size=1e-3, censoring_time=1e-2)
    assert simulate_first_cycle(zero_model, cfg, 0) == Censored(1e-2)


def test_single_path_batch_equals_simulate_path(const_model):
    cfg = SimulationConfig(step_size=1e-3, horizon=2.0, n_paths=1, master_seed=3)
    (batch,) = simulate_batch(const_model, cfg)
    single = simulate_path(const_model, cfg, 0)
    assert np.array_equal(batch.positions, single.positions)


def test_determinism_and_worker_independence(const_model):
    cfg = SimulationConfig(step_size=1e-3, horizon=3.0, n_paths=8, master_seed=42)
    a = simulate_batch(const_model, cfg, workers=1)
    b = simulate_batch(const_model, cfg, workers=8)
    c = simulate_batch(const_model, cfg, workers=1)
    for x, y, z in zip(a, b, c):
        assert x.positions.tobytes() == y.positions.tobytes() == z.positions.tobytes()
    assert len({p.positions[-1] for p in a}) == 8


def test_streaming_matches_recorded_path(const_model):
    cfg = SimulationConfig(step_size=1e-3, horizon=4.0, n_paths=3, master_seed=9)
    from circlab import detect_cycle_events

    for i in range(3):
        run = simulate_cycles(const_model, cfg, i)
        path = simulate_path(const_model, cfg, i)
        log = detect_cycle_events(path)
        assert run.end == path.positions[-1]
        np.testing.assert_allclose(run.log.forming_times, log.forming_times, atol=1e-12)
        assert run.log.signs.tolist() == log.signs.tolist()


def test_first_cycle_agrees_with_path_scan(const_model):
    cfg = SimulationConfig(step_size=1e-3, n_paths=5, master_seed=2)
    from circlab import detect_cycle_events

    for i in range(5):
        fc = simulate_first_cycle(const_model, cfg, i)
        path = simulate_path(const_model, cfg, i)
        log = detect_cycle_events(path)
        assert log.signs[0] == fc.sign
        assert log.forming_times[0] == pytest.approx(fc.T, abs=1e-12)


def test_stationary_start_is_reproducible(tilted_sine_model):
    cfg = SimulationConfig(step_size=1e-3, horizon=0.0, n_paths=2000, stationary_start=True, master_seed=1)
    starts = np.array([r.start for r in simulate_batch(tilted_sine_model, cfg, kind="cycles")])
    assert np.all((starts >= 0) & (starts < 1))
    again = np.array([r.start for r in simulate_batch(tilted_sine_model, cfg, kind="cycles")])
    assert np.array_equal(starts, again)


def test_streams_are_distinct():
    a = streams.stream(1, 0).standard_normal(4)
    b = streams.stream(1, 1).standard_normal(4)
    c = streams.stream(1, 0, streams.BRIDGE).standard_normal(4)
    assert not np.allclose(a, b) and not np.allclose(a, c)
    with pytest.raises(ValueError):
        streams.stream(-1, 0)


def test_config_validation():
    with pytest.raises(ValueError):
        SimulationConfig(step_size=0.0)
    with pytest.raises(ValueError):
        SimulationConfig(horizon=-1.0)
    with pytest.raises(ValueError):
        SimulationConfig(n_paths=0)
    with pytest.raises(ValueError):
        SimulationConfig.from_dict({"step": 0.1})


def test_batch_error_collects_failures():
    def boom(i):
        if i % 2:
            raise RuntimeError("odd")
        return i

    with pytest.raises(BatchError) as info:
        ordered_map(boom, range(6))
    assert sorted(info.value.failures) == [1, 3, 5]


def test_path_dump_roundtrip(tmp_path, const_model):
    cfg = SimulationConfig(step_size=1e-2, horizon=1.0, n_paths=3)
    paths = simulate_batch(const_model, cfg)
    dump_paths(paths, cfg, tmp_path / "p.bin")
    header, loaded = load_paths(tmp_path / "p.bin")
    assert header["model_hash"] == const_model.hash
    for p, (t, x) in zip(paths, loaded):
        assert np.array_equal(p.times, t) and np.array_equal(p.positions, x)


def test_convergence_study_shape(const_model):
    cfg = SimulationConfig(step_size=1e-2, n_paths=50)
    out = convergence_study(const_model, cfg, lambda rs: first_cycle_arrays(rs)[0].mean(), factors=(1, 2))
    assert [dt for dt, _ in out] == [1e-2, 5e-3]
