import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from headpond.pid import PidController, PidGains, PidSettings, PidState, pid_controller_step, pid_step
from headpond.plant import PlantState


def run(gains, errors, dt=1.0, lo=-1e9, hi=1e9):
    state = PidState()
    outs = []
    for e in errors:
        out, state = pid_step(gains, state, e, -e, dt, lo, hi)
        outs.append(out)
    return outs, state


def test_proportional_only():
    out, _ = pid_step(PidGains(2.0), PidState(), 1.0, 0.0, 1.0, -100, 100)
    assert out == 2.0


def test_pure_integration():
    # constant error 1 over 2 s in steps of 1 s
    outs, _ = run(PidGains(0.0, 1.0), [1.0, 1.0])
    assert outs[-1] == pytest.approx(2.0)


def test_saturation_freezes_integrator():
    out, st_ = pid_step(PidGains(1000.0, 1.0), PidState(), 1.0, 0.0, 1.0, 0.0, 100.0)
    assert out == 100.0
    assert st_.integral == 0.0


def test_derivative_acts_on_measurement():
    g = PidGains(0.0, 0.0, 1.0)
    _, s = pid_step(g, PidState(), 0.0, 10.0, 1.0, -100, 100)
    # setpoint jump changes the error but not the measurement: no kick
    out, s = pid_step(g, s, 5.0, 10.0, 1.0, -100, 100)
    assert out == 0.0
    out, _ = pid_step(g, s, 3.0, 12.0, 1.0, -100, 100)
    assert out == pytest.approx(-2.0)


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        pid_step(PidGains(1.0), PidState(), float("nan"), 0.0, 1.0, 0, 1)
    with pytest.raises(ValueError):
        pid_step(PidGains(1.0), PidState(), 1.0, 0.0, 0.0, 0, 1)
    with pytest.raises(ValueError):
        pid_step(PidGains(1.0), PidState(), 1.0, 0.0, 1.0, 1, 1)
    with pytest.raises(ValueError):
        PidGains(-1.0)


@given(
    st.lists(st.floats(-5, 5), min_size=1, max_size=30),
    st.floats(0, 3), st.floats(0, 1), st.floats(0, 2),
)
def test_linear_before_saturation(errors, kp, ki, kd):
    g = PidGains(kp, ki, kd)
    a, _ = run(g, errors)
    b, _ = run(g.scaled(2.0), errors)
    np.testing.assert_allclose(b, 2 * np.asarray(a), rtol=1e-9, atol=1e-9)


def test_anti_windup_bound():
    g = PidGains(1.0, 0.5)
    state = PidState()
    frozen = None
    for _ in range(200):
        out, state = pid_step(g, state, 5.0, 0.0, 1.0, -10.0, 10.0)
        if out == 10.0 and frozen is None:
            frozen = state.integral
        if frozen is not None:
            assert state.integral <= frozen
    assert frozen is not None
    # once the error reverses the integrator unwinds; the trapezoid of +5
    # and -5 is zero, so the drop shows from the second reversed sample
    out, state2 = pid_step(g, state, -5.0, 0.0, 1.0, -10.0, 10.0)
    assert out < 10.0
    _, state3 = pid_step(g, state2, -5.0, 0.0, 1.0, -10.0, 10.0)
    assert state3.integral < state.integral


def test_controller_at_targets_is_idle():
    states = (PidState(),) * 3
    gains = (PidSettings().valve, PidSettings().inflow, PidSettings().inflow)
    u, _ = pid_controller_step((30, 30, 30, 0, 0), (30, 30, 30), gains, states, 5.0, 100.0)
    assert tuple(u) == (0.0, 0.0, 0.0, 0.0)


def test_controller_saturates_and_couples_valves():
    ctrl = PidController(PidSettings(), dt=5.0, u_max=100.0)
    for k in range(50):
        u = ctrl(5.0 * k, PlantState(3.0, 0.0, 10.0, 0.0, 0.0), (30, 30, 30))
        assert u.s1 == u.s2
        assert 0 <= u.s1 <= 1
    assert u.U1 == 100.0
    assert u.U2 == 100.0


def test_controller_loops_use_their_own_pond():
    ctrl = PidController(PidSettings(inflow=PidGains(1.0)), dt=5.0)
    u = ctrl(0.0, PlantState(30.0, 25.0, 28.0, 0.0, 0.0), (30, 30, 30))
    assert (u.U1, u.U2) == (5.0, 2.0)
    assert u.s1 == 0.0
