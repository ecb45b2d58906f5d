import io
import math

import numpy as np
import pytest

from epinarr.dsl import parse_model
from epinarr.errors import NonIntegerInitialAmount, NumericalBlowup, ValidationFailed
from epinarr.sim import (
    SimConfig, Trajectory, child_rng, mean_trajectory, simulate_ode, simulate_ssa,
    trajectory_csv, write_trajectory_csv,
)

EXACT = 100 * math.exp(-1)


def reference_sir(beta, g, y0, t_end, h):
    """Plain RK4 on the textbook SIR equations, written out by hand."""
    def f(y):
        s, i, _ = y
        return np.array([-beta * s * i, beta * s * i - g * i, g * i])
    y = np.array(y0, dtype=float)
    for _ in range(round(t_end / h)):
        k1 = f(y)
        k2 = f(y + h / 2 * k1)
        k3 = f(y + h / 2 * k2)
        k4 = f(y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def test_decay_matches_exponential(decay):
    traj = simulate_ode(decay, SimConfig(1.0, dt=0.001))
    assert traj.final("A") == pytest.approx(EXACT, abs=1e-3)
    assert traj.times[-1] == 1.0


def test_rk4_fourth_order(decay):
    errs = [abs(simulate_ode(decay, SimConfig(1.0, dt=h)).final("A") - EXACT)
            for h in (0.1, 0.05, 0.025)]
    slopes = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(slopes) > 3.8


def test_zero_rate_keeps_initial_state():
    m = parse_model("z = 0;\nX = (z, 1) << X;\nX[5]")
    traj = simulate_ode(m, SimConfig(2.0, dt=0.1, output_every=0.5))
    assert (traj.column("X") == 5).all()


def test_sir_against_reference(sir):
    traj = simulate_ode(sir, SimConfig(10.0, dt=0.01, output_every=1.0))
    ref = reference_sir(0.0003, 0.1, (990, 10, 0), 10.0, 0.001)
    np.testing.assert_allclose(traj.amounts[-1], ref, rtol=1e-8)
    totals = traj.amounts.sum(axis=1)
    assert np.max(np.abs(totals - 1000) / 1000) < 1e-9


def test_sampling_grid(decay):
    traj = simulate_ode(decay, SimConfig(1.0, dt=0.01, output_every=0.5))
    assert traj.times.tolist() == [0.0, 0.5, 1.0]


def test_ragged_grid_ends_at_t_end(decay):
    traj = simulate_ode(decay, SimConfig(1.0, dt=0.01, output_every=0.3))
    assert traj.times.tolist() == pytest.approx([0.0, 0.3, 0.6, 0.9, 1.0])


def test_dt_larger_than_sampling_is_rejected(decay):
    with pytest.raises(ValueError):
        simulate_ode(decay, SimConfig(1.0, dt=0.5, output_every=0.1))


@pytest.mark.parametrize("kwargs", [
    {"t_end": 0}, {"t_end": 1, "dt": 0}, {"t_end": 1, "replicates": 0},
    {"t_end": 1, "output_every": 2}, {"t_end": 1, "seed": -1},
])
def test_bad_config(kwargs):
    with pytest.raises(ValueError):
        SimConfig(**kwargs)


def test_invalid_model_is_refused():
    with pytest.raises(ValidationFailed):
        simulate_ode(parse_model("X = (go, 1) << X;\nX[1]"), SimConfig(1.0))


def test_blowup_is_reported():
    m = parse_model("k = 5;\ngrow = k * X * X;\nX = (grow, 1) >> X;\nX[10]")
    with pytest.raises(NumericalBlowup):
        simulate_ode(m, SimConfig(10.0, dt=0.01, output_every=1.0))


def test_event_switches_rate_at_trigger():
    m = parse_model("k = 0;\ngrow = k;\nX = (grow, 1) >> X;\n"
                    "event On at 1 { k = 2 }\nX[0]")
    traj = simulate_ode(m, SimConfig(2.0, dt=0.1, output_every=0.5))
    # flat until t = 1, then linear growth at rate 2
    assert traj.column("X").tolist() == pytest.approx([0, 0, 0, 1, 2])


def test_event_at_sample_time_applies_first():
    m = parse_model("v = 0;\nX = ();\nevent Set at 1 { X = 7 }\nX[0]")
    traj = simulate_ode(m, SimConfig(2.0, dt=0.5, output_every=1.0))
    assert traj.column("X").tolist() == [0, 7, 7]
    [run] = simulate_ssa(m, SimConfig(2.0, output_every=1.0))
    assert run.column("X").tolist() == [0, 7, 7]


def test_ssa_mean_decay(decay):
    runs = simulate_ssa(decay, SimConfig(1.0, replicates=400, seed=11, output_every=1.0))
    finals = np.array([r.final("A") for r in runs])
    # binomial(100, e^-1): sd 4.82, so the mean of 400 runs is within 0.25 at 1 sigma
    assert abs(finals.mean() - EXACT) < 4 * 4.82 / math.sqrt(400)
    assert finals.var() == pytest.approx(100 * math.exp(-1) * (1 - math.exp(-1)), rel=0.25)


def test_ssa_counts_are_integers_and_monotone(decay):
    [run] = simulate_ssa(decay, SimConfig(1.0, seed=3, output_every=0.01))
    a = run.column("A")
    assert np.all(a == np.round(a))
    assert np.all(np.diff(a) <= 0)


def test_ssa_is_reproducible(decay):
    cfg = SimConfig(1.0, replicates=3, seed=42, output_every=0.1)
    first = [trajectory_csv(r) for r in simulate_ssa(decay, cfg)]
    second = [trajectory_csv(r) for r in simulate_ssa(decay, cfg)]
    assert first == second
    assert len(set(first)) == 3


def test_ssa_replicate_streams_are_independent_of_count(decay):
    few = simulate_ssa(decay, SimConfig(1.0, replicates=2, seed=5, output_every=0.5))
    many = simulate_ssa(decay, SimConfig(1.0, replicates=4, seed=5, output_every=0.5))
    assert few == many[:2]


def test_child_streams_follow_seed_sequence_spawn():
    spawned = np.random.SeedSequence(9).spawn(2)[1]
    want = np.random.Generator(np.random.PCG64(spawned)).random(3)
    np.testing.assert_array_equal(child_rng(9, 1).random(3), want)


def test_ssa_no_reactions_is_flat():
    m = parse_model("X = ();\nX[4]")
    [run] = simulate_ssa(m, SimConfig(3.0, output_every=1.0))
    assert run.rows == [(0.0, [4.0]), (1.0, [4.0]), (2.0, [4.0]), (3.0, [4.0])]


def test_ssa_needs_integer_amounts():
    m = parse_model("X = ();\nX[2.5]")
    with pytest.raises(NonIntegerInitialAmount):
        simulate_ssa(m, SimConfig(1.0))


def test_ssa_never_goes_negative():
    # second-order reactant with only one molecule left must not fire
    m = parse_model("k = 1;\npair = k * X;\nX = (pair, 2) << X;\nX[5]")
    runs = simulate_ssa(m, SimConfig(50.0, replicates=5, output_every=50.0))
    assert all(r.final("X") == 1 for r in runs)


def test_csv_layout(decay):
    traj = simulate_ode(decay, SimConfig(1.0, dt=0.01, output_every=0.5))
    lines = trajectory_csv(traj).split("\n")
    assert lines[0] == "time,A"
    assert lines[1] == "0.0,100.0"
    assert [l.split(",")[0] for l in lines[1:4]] == ["0.0", "0.5", "1.0"]
    assert lines[-1] == ""


def test_csv_minimal():
    traj = Trajectory(["S", "I", "R"], [0.0], [[1, 2, 3]])
    assert trajectory_csv(traj) == "time,S,I,R\n0.0,1.0,2.0,3.0\n"


def test_csv_header_sir(sir, tmp_path):
    traj = simulate_ode(sir, SimConfig(1.0, dt=0.1, output_every=1.0))
    path = tmp_path / "sir.csv"
    write_trajectory_csv(traj, path)
    buf = io.StringIO()
    write_trajectory_csv(traj, buf)
    assert path.read_text().startswith("time,S,I,R\n")
    assert buf.getvalue() == path.read_text()


def test_mean_trajectory():
    a = Trajectory(["X"], [0, 1], [[0], [2]])
    b = Trajectory(["X"], [0, 1], [[2], [4]])
    assert mean_trajectory([a, b]) == Trajectory(["X"], [0, 1], [[1], [3]])
