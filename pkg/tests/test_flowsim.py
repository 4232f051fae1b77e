import math

import numpy as np
import pytest

from curveflow import catalog
from curveflow.curvekit import sample
from curveflow.errors import (
    IncompatibleClosedFlow,
    NullCurveDeveloped,
    StabilityError,
)
from curveflow.flowsim import (
    FlowSpec,
    arclength_drift,
    default_dt,
    dv_dt_rhs,
    evaluate_speeds,
    evolve,
    initial_state,
    solve_inextensible_f1,
    velocity,
)
from curveflow.frenet import frenet_apparatus

TWO_PI = 2.0 * math.pi


def test_flow_spec_validation():
    flow = FlowSpec.explicit(["1", "0", "0"])
    flow.validate(3)
    with pytest.raises(ValueError):
        flow.validate(2)
    with pytest.raises(ValueError):
        FlowSpec.explicit(["sin(q)"]).validate(1)
    with pytest.raises(ValueError):
        FlowSpec(mode="weird", speeds=(None,)).validate(1)


def test_solve_f1_zero_normal_speed(circle_256):
    fd = frenet_apparatus(circle_256)
    f1 = solve_inextensible_f1(circle_256, fd, np.zeros(256), 0.25)
    assert np.allclose(f1, 0.25)


def test_solve_f1_straight_line_any_f2():
    c = sample(catalog.curve("line2", 64))
    fd = frenet_apparatus(c)  # completed frame, k1 = 0
    f1 = solve_inextensible_f1(c, fd, np.sin(3.0 * c.s) + 2.0, 0.7)
    assert np.allclose(f1, 0.7)


def test_solve_f1_circle_sine(circle_256):
    fd = frenet_apparatus(circle_256)
    f1 = solve_inextensible_f1(circle_256, fd, np.sin(circle_256.s), 0.0)
    assert np.max(np.abs(f1 - (1.0 - np.cos(circle_256.s)))) < 1e-6


def test_solve_f1_incompatible_loop(circle_256):
    fd = frenet_apparatus(circle_256)
    with pytest.raises(IncompatibleClosedFlow) as err:
        solve_inextensible_f1(circle_256, fd, np.ones(256), 0.0)
    assert err.value.residual == pytest.approx(TWO_PI, rel=1e-6)


def test_dv_dt_rhs_examples(circle_256):
    # synthesized profile makes the rate vanish identically
    sine = catalog.flow("inextensible_sine", 3)
    st = initial_state(circle_256, sine)
    assert np.max(np.abs(dv_dt_rhs(st))) < 1e-5

    shrink = catalog.flow("normal_shrink", 3)
    st2 = initial_state(circle_256, shrink)
    assert np.max(np.abs(dv_dt_rhs(st2) + 1.0)) < 1e-9

    zero = catalog.flow("zero", 3)
    st3 = initial_state(circle_256, zero)
    assert np.max(np.abs(dv_dt_rhs(st3))) == 0.0


def test_velocity_is_frame_combination(circle_256):
    flow = catalog.flow("rigid_rotation", 3)
    st = initial_state(circle_256, flow)
    w = velocity(st)
    p = circle_256.points
    expected = np.stack([np.zeros(256), -p[:, 2], p[:, 1] - 1.0], axis=1)
    assert np.max(np.abs(w - expected)) < 1e-12


def test_evolve_translates_line():
    c = sample(catalog.curve("line3", 64))
    flow = catalog.flow("tangent_translate", 3)
    st = initial_state(c, flow, frame_vectors=1)
    traj = evolve(st, flow, 1e-3, 1000)
    moved = traj.states[-1].curve.points - traj.states[0].curve.points
    assert np.max(np.abs(moved - np.array([0.0, 1.0, 0.0]))) < 1e-12
    assert arclength_drift(traj) < 1e-9


def test_evolve_rigid_rotation_preserves_length(rigid_traj_short):
    assert arclength_drift(rigid_traj_short) < 1e-6


def test_evolve_shrink_rate(shrink_traj):
    drift = arclength_drift(shrink_traj)
    assert abs(drift / 0.1 - TWO_PI) < 1e-3
    # exact solution: L(t) = 2*pi*(1 - t)
    lengths = np.array([s.curve.total_length for s in shrink_traj.states])
    times = shrink_traj.times
    assert np.max(np.abs(lengths - TWO_PI * (1.0 - times))) < 1e-4


def test_evolve_synthesized_flow_reruns_solver_each_stage(sine_traj_short):
    # the synthesized profile stays consistent: pointwise rate stays ~0
    for st in sine_traj_short.states[:: len(sine_traj_short.states) // 4]:
        assert np.max(np.abs(dv_dt_rhs(st))) < 1e-5


def test_trajectory_bookkeeping(rigid_traj_short):
    assert len(rigid_traj_short) == 101
    times = rigid_traj_short.times
    assert np.allclose(np.diff(times), 1e-3)
    d = rigid_traj_short.diagnostics
    assert [x.step for x in d] == list(range(101))
    assert d[0].max_k1 == pytest.approx(1.0, abs=1e-6)


def test_timestep_refinement_at_least_fourth_order():
    c = sample(catalog.curve("circle", 128))
    flow = catalog.flow("rigid_rotation", 3)
    drifts = []
    for dt in (0.2, 0.1, 0.05):
        st = initial_state(c, flow)
        traj = evolve(st, flow, dt, int(round(0.8 / dt)))
        drifts.append(arclength_drift(traj))
    for a, b in zip(drifts, drifts[1:]):
        assert a / b > 8.0, drifts


def test_speed_law_on_random_explicit_flows():
    # the measured dv/dt must track the predicted rate on generic curves
    from curveflow.verify import check_speed_evolution

    for curve_name, n_s, dt, steps in (
        ("timelike_helix", 128, 5e-4, 8),
        ("hyperbola", 128, 1e-3, 20),
    ):
        c = sample(catalog.curve(curve_name, n_s))
        for seed in (1, 2):
            flow = catalog.random_explicit_flow(c.n, seed)
            traj = evolve(initial_state(c, flow), flow, dt, steps)
            r = check_speed_evolution(traj).residuals[0]["speed_evolution"]
            assert r < 5e-3, (curve_name, seed, r)


def test_evolve_incompatible_flow_raises(circle_256):
    flow = FlowSpec.inextensible(["1", "0"], name="bad")
    with pytest.raises(IncompatibleClosedFlow):
        initial_state(circle_256, flow)


def test_evolve_develops_null_tangent():
    # contracting the speed of a timelike curve drives the tangent null
    c = sample(catalog.curve("hyperbola", 64), null_tol=1e-4)
    flow = FlowSpec.explicit(["0", "-3"], name="contract")
    st = initial_state(c, flow)
    with pytest.raises(NullCurveDeveloped) as err:
        evolve(st, flow, 2e-3, 3000)
    assert err.value.trajectory is not None
    assert 0 < len(err.value.trajectory.states) < 3001


def test_evolve_stability_guard(circle_256):
    flow = catalog.flow("normal_shrink", 3)
    st = initial_state(circle_256, flow)
    with pytest.raises(StabilityError) as err:
        evolve(st, flow, 0.7, 2)  # one step shrinks the circle by 70%
    assert err.value.trajectory is not None


def test_evolve_argument_validation(circle_256):
    flow = catalog.flow("zero", 3)
    st = initial_state(circle_256, flow)
    with pytest.raises(ValueError):
        evolve(st, flow, -1e-3, 10)
    with pytest.raises(ValueError):
        evolve(st, flow, 1e-3, 0)
    with pytest.raises(ValueError):
        evolve(st, flow, 1e-3, 10, t_horizon=5e-3)


def test_truncated_frame_rejects_active_higher_speeds():
    c = sample(catalog.curve("line3", 64))
    flow = FlowSpec.explicit(["1", "1", "0"], name="sideways")
    with pytest.raises(Exception, match="frame"):
        initial_state(c, flow, frame_vectors=1)


def test_default_dt_scales_with_speed(circle_256):
    slow = initial_state(circle_256, catalog.flow("zero", 3))
    fast = initial_state(circle_256, FlowSpec.explicit(["10", "0", "0"]))
    assert default_dt(slow) == pytest.approx(0.1 * circle_256.h, rel=1e-6)
    assert default_dt(fast) == pytest.approx(0.01 * circle_256.h, rel=1e-6)


def test_evaluate_speeds_time_dependence(circle_256):
    fd = frenet_apparatus(circle_256)
    flow = FlowSpec.explicit(["t*s", "0", "0"])
    f0, f1s0 = evaluate_speeds(flow, circle_256, fd, 0.0)
    f2, f1s2 = evaluate_speeds(flow, circle_256, fd, 2.0)
    assert np.max(np.abs(f0[0])) == 0.0
    assert np.allclose(f2[0], 2.0 * circle_256.s)
    assert np.allclose(f1s2, 2.0)


def test_arclength_drift_single_state(circle_256):
    from curveflow.flowsim import Trajectory

    flow = catalog.flow("zero", 3)
    st = initial_state(circle_256, flow)
    traj = Trajectory(states=[st], dt=1.0, flow=flow, frame_vectors=3)
    assert arclength_drift(traj) == 0.0
