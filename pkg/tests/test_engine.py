import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cimsim.engine import (CimParams, CimSolver, NumericalDivergence, PumpSchedule, Trajectory,
                           coupling_matrix, feedback_field, load_params, read_trajectory_csv, readout,
                           run_batch, simulate, simulate_many, step, with_seed)
from cimsim.graphs import mobius_ladder, mobius_maxcut
from cimsim.ising import IsingModel, maxcut_to_ising
from cimsim.solvers import brute_force
from conftest import random_ising, seeds

FERRO = IsingModel(2, {(0, 1): 1.0})
ANTI = IsingModel(2, {(0, 1): -1.0})


def quiet(**kw):
    return CimParams(noise_amp=0.0, **kw)


# -- parameters -------------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(p_start=1.0), dict(p_start=0.5, p_end=0.4), dict(rounds=0)])
def test_schedule_validation(kw):
    with pytest.raises(ValueError):
        PumpSchedule(**kw)


@pytest.mark.parametrize("kw", [dict(r=0.0), dict(noise_amp=-1.0), dict(dt=0.0), dict(feedback="x")])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        CimParams(**kw)


def test_pump_is_linear():
    s = PumpSchedule(0.5, 1.5, 11)
    assert s.pump(0) == 0.5 and s.pump(10) == 1.5 and s.pump(5) == pytest.approx(1.0)


def test_params_dict_round_trip():
    p = CimParams(PumpSchedule(0.2, 1.4, 50), r=0.3, noise_amp=0.05, dt=0.2, seed=9, x0_std=0.01)
    assert CimParams.from_dict(p.to_dict()) == p
    with pytest.raises(ValueError):
        CimParams.from_dict({"bogus": 1})


def test_load_params_formats(tmp_path):
    kv = tmp_path / "cim.cfg"
    kv.write_text("# comment\nrounds = 300\nr=0.2\n")
    js = tmp_path / "cim.json"
    js.write_text(json.dumps({"rounds": 300, "r": 0.2}))
    for path in (kv, js):
        p = CimParams.from_dict(load_params(path))
        assert p.schedule.rounds == 300 and p.r == 0.2
    kv.write_text("rounds 300\n")
    with pytest.raises(ValueError):
        load_params(kv)


# -- feedback and readout ---------------------------------------------------

def test_feedback_zero_couplings():
    assert np.all(feedback_field(IsingModel(3), [1, -1, 1], 0.5) == 0)


def test_feedback_sign_is_descent():
    assert list(feedback_field(FERRO, [1, 1], 0.7)) == [0.7, 0.7]
    assert list(feedback_field(ANTI, [1, 1], 0.7)) == [-0.7, -0.7]


@given(seeds, st.floats(0.01, 5), st.floats(0.01, 5))
def test_feedback_is_linear(seed, r1, r2):
    rng = np.random.default_rng(seed)
    m = random_ising(rng, 6, field=False)
    s = rng.choice([-1, 1], 6)
    assert np.allclose(feedback_field(m, s, r1 + r2), feedback_field(m, s, r1) + feedback_field(m, s, r2))
    assert np.allclose(feedback_field(m, -s, r1), -feedback_field(m, s, r1))


def test_feedback_injection_does_not_raise_energy():
    # moving the spins along f lowers the quadratic form -1/2 s J s
    m = random_ising(np.random.default_rng(2), 8, field=False)
    s = np.random.default_rng(3).normal(size=8)
    f = feedback_field(m, s, 1.0)
    jd = m.to_dense()
    h = lambda v: -0.5 * v @ jd @ v
    assert h(s + 1e-4 * f) <= h(s)


def test_feedback_rejects_field_and_bad_shapes():
    with pytest.raises(ValueError):
        feedback_field(IsingModel(2, {}, [1.0, 0]), [1, 1], 1.0)
    with pytest.raises(ValueError):
        feedback_field(FERRO, [1, 1, 1], 1.0)


def test_readout_examples():
    assert list(readout([0.3, -0.1])) == [1, -1]
    assert list(readout([0.0, 0.0])) == [1, 1]
    with pytest.raises(ValueError):
        readout([np.nan, 1.0])


@given(st.lists(st.floats(-10, 10).filter(lambda v: v != 0), min_size=1, max_size=20))
def test_readout_sign_symmetry(x):
    x = np.array(x)
    assert np.array_equal(readout(-x), -readout(x))


def test_normalization_bounds_feedback():
    m = random_ising(np.random.default_rng(4), 20, field=False)
    jd = coupling_matrix(m)
    assert np.isclose(np.abs(jd).sum(axis=1).max(), 1.0)
    assert np.array_equal(coupling_matrix(m, normalize=False), m.to_dense())


# -- dynamics ---------------------------------------------------------------

def test_below_threshold_decays():
    m = IsingModel(3)
    params = quiet(schedule=PumpSchedule(0.5, 1.5, 100))
    x = np.array([0.05, -0.02, 0.01])
    mags = []
    for _ in range(400):
        x = step(x, m, params, 0)
        mags.append(np.abs(x))
    assert np.all(np.diff(np.array(mags), axis=0) < 0)
    assert np.abs(x).max() < 1e-6


@pytest.mark.parametrize("delta", [0.1, 0.25, 0.5])
def test_above_threshold_fixed_point(delta):
    m = IsingModel(3)
    params = quiet(schedule=PumpSchedule(0.5, 1 + delta, 10))
    x = np.array([0.01, -0.3, 1.2])
    for _ in range(5000):
        x = step(x, m, params, 9)
    assert np.allclose(np.abs(x), np.sqrt(delta), atol=1e-6)
    assert list(np.sign(x)) == [1, -1, 1]


def test_step_uses_rng_noise():
    params = CimParams(noise_amp=0.5)
    a = step(np.zeros(2), FERRO, params, 0, np.random.default_rng(1))
    b = step(np.zeros(2), FERRO, params, 0, np.random.default_rng(1))
    assert np.array_equal(a, b) and np.any(a != step(np.zeros(2), FERRO, params, 0))


def test_divergence_names_round():
    params = quiet(dt=50.0, sat=1.0, schedule=PumpSchedule(0.5, 1.5, 50))
    with pytest.raises(NumericalDivergence) as err:
        simulate(IsingModel(2), params, x0=np.array([3.0, -3.0]))
    assert err.value.round_index >= 1 and "round" in str(err.value)


def test_single_round_zero_state():
    params = quiet(schedule=PumpSchedule(0.5, 1.5, 1))
    tr = simulate(IsingModel(2), params, x0=np.zeros(2))
    assert np.all(tr.amplitudes == 0) and list(tr.final) == [1, 1] and np.isfinite(tr.energy).all()
    # with couplings the tie readout (+1, +1) injects one feedback kick
    tr = simulate(FERRO, params, x0=np.zeros(2))
    assert np.allclose(tr.amplitudes[0], params.dt * params.r) and tr.energy[0] == -1


def test_trajectory_energy_matches_readout():
    m = maxcut_to_ising(mobius_ladder(12))
    tr = simulate(m, CimParams(seed=4, schedule=PumpSchedule(0.5, 1.5, 300)))
    assert tr.amplitudes.shape == (300, 12)
    for t in range(0, 300, 7):
        assert tr.energy[t] == m.energies(readout(tr.amplitudes[t]))[0]
    assert np.array_equal(tr.final, readout(tr.amplitudes[-1]))


def test_simulate_is_deterministic():
    m = random_ising(np.random.default_rng(0), 10, field=False)
    p = CimParams(seed=123, schedule=PumpSchedule(0.5, 1.5, 200))
    a, b = simulate(m, p), simulate(m, p)
    assert np.array_equal(a.amplitudes, b.amplitudes) and np.array_equal(a.energy, b.energy)


def test_global_flip_symmetry():
    m = random_ising(np.random.default_rng(1), 8, field=False)
    p = CimParams(schedule=PumpSchedule(0.5, 1.5, 200))
    rng = np.random.default_rng(9)
    x0, noise = rng.normal(0, 0.1, 8), rng.standard_normal((200, 8))
    a = simulate(m, p, x0=x0, noise=noise)
    b = simulate(m, p, x0=-x0, noise=-noise)
    assert np.array_equal(a.amplitudes, -b.amplitudes)


def test_rounds_to_target():
    g = mobius_ladder(12)
    m = maxcut_to_ising(g)
    target = g.total_weight - 2 * mobius_maxcut(12)
    tr = simulate(m, CimParams(seed=2), target)
    if tr.rounds_to_target is not None:
        assert tr.energy[tr.rounds_to_target - 1] <= target
        assert np.all(tr.energy[:tr.rounds_to_target - 1] > target)
    assert simulate(m, CimParams(seed=2), target - 1).rounds_to_target is None


def test_trajectory_csv_round_trip():
    tr = simulate(FERRO, CimParams(schedule=PumpSchedule(0.5, 1.5, 5)))
    text = tr.to_csv()
    assert text.splitlines()[0] == "round,x_0,x_1,energy"
    assert text.splitlines()[1].startswith("1,")
    amps, energy = read_trajectory_csv(text)
    assert np.array_equal(amps, tr.amplitudes) and np.array_equal(energy, tr.energy)


def test_simulate_many_matches_simulate():
    m = random_ising(np.random.default_rng(5), 9, field=False)
    p = CimParams(schedule=PumpSchedule(0.5, 1.5, 150))
    seeds_ = [3, 14, 15, 92]
    batch = simulate_many(m, p, seeds_)
    for k, s in enumerate(seeds_):
        assert np.array_equal(batch[k], simulate(m, with_seed(p, s)).final)


def test_ferromagnetic_pair_aligns():
    spins = CimSolver().solve_many(FERRO, range(100))
    assert (spins[:, 0] == spins[:, 1]).sum() >= 90


def test_solver_handles_fields_through_ancilla():
    m = random_ising(np.random.default_rng(6), 8)
    e_bf, _ = brute_force(m, max_optima=1)
    energies = m.energies(CimSolver().solve_many(m, range(20)))
    assert energies.shape == (20,) and np.isclose(energies.min(), e_bf)


def test_energy_decreases_late_in_ramp():
    m = maxcut_to_ising(mobius_ladder(20))
    p = CimParams(schedule=PumpSchedule(0.5, 1.5, 600))
    traces = np.array([simulate(m, with_seed(p, s)).energy for s in range(30)])
    mean = traces.mean(axis=0)
    late = mean[300:]
    assert late[-1] <= late[0]
    assert np.mean(np.diff(late[::50]) <= 1e-9) >= 0.8


def test_mobius20_best_of_100_is_optimal():
    g = mobius_ladder(20)
    m = maxcut_to_ising(g)
    e_bf, _ = brute_force(m, max_optima=1)
    assert m.energies(CimSolver().solve_many(m, range(100))).min() == e_bf


def test_run_batch_unreachable_target():
    m = maxcut_to_ising(mobius_ladder(8))
    e_bf, _ = brute_force(m, max_optima=1)
    st_ = run_batch(m, CimParams(schedule=PumpSchedule(0.5, 1.5, 100)), e_bf - 1, runs=10)
    assert st_.mean == 0.0 and st_.solver == "cim"


def test_run_batch_reproducible():
    m = maxcut_to_ising(mobius_ladder(16))
    p = CimParams(seed=5, schedule=PumpSchedule(0.5, 1.5, 200))
    assert run_batch(m, p, -20, runs=10, batches=2) == run_batch(m, p, -20, runs=10, batches=2)


def test_analog_feedback_mode_runs():
    m = maxcut_to_ising(mobius_ladder(8))
    tr = simulate(m, CimParams(feedback="analog", schedule=PumpSchedule(0.5, 1.5, 300)))
    assert isinstance(tr, Trajectory) and np.isfinite(tr.amplitudes).all()
