import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adaptive_hermite.basis import BasisParams, SpectralField, analyze, collocation_points, synthesize
from adaptive_hermite.controller import (
    AdaptiveConfig,
    EventKind,
    ThresholdState,
    controller_step,
    maybe_adapt_order,
    maybe_move,
    maybe_scale,
    scaling_factor,
)
from adaptive_hermite.experiments import RunConfig, run
from adaptive_hermite.indicators import exterior_error_indicators, frequency_indicator
from adaptive_hermite.integrator import BilinearForm, Propagator, SourceTerm, step
from adaptive_hermite.problems import ParabolicProblem, example2
from adaptive_hermite.spectral_ops import deriv_norm, project, tail_norm, x_weighted_deriv_norm

SQRT_PI = math.sqrt(math.pi)


def expand(fn, basis):
    return analyze(fn(collocation_points(basis)), basis)


def wide_gaussian(beta=1.0, n=30):
    # e^{-x^2/8} is the zeroth function of the beta = 1/2 basis; project it exactly
    g = SpectralField(BasisParams(0.5, 0.0, 0), [1.0])
    return project(g, BasisParams(beta, 0.0, n))[0]


def fresh(field, cfg):
    return ThresholdState.initial(field, cfg)


def test_config_validation():
    AdaptiveConfig().validate()
    for bad in (dict(q=1.0), dict(nu=1.0), dict(mu=0.9), dict(eta=1.01, eta0=1.02),
                dict(gamma=0.5), dict(beta_min=5, beta_max=0.2), dict(delta=0.1, d_max=0.01),
                dict(n_max=0)):
        with pytest.raises(ValueError):
            AdaptiveConfig(**bad).validate()
    cfg = AdaptiveConfig()
    cfg.set_move_mode("left")
    assert cfg.move and cfg.move_left and not cfg.move_right
    cfg.set_move_mode("off")
    assert not cfg.move
    with pytest.raises(ValueError):
        cfg.set_move_mode("up")


def test_scaling_factor_formula():
    assert scaling_factor(1.0, 0.99) == pytest.approx(0.01 * math.sqrt(1.99) / (math.sqrt(2) * 0.99))
    assert scaling_factor(2.0, 2.0) == 0.0


# moving

def test_move_noop_below_thresholds():
    f = wide_gaussian()
    cfg = AdaptiveConfig()
    st_ = fresh(f, cfg)
    g, ev = maybe_move(f, cfg, st_)
    assert ev is None and g is f


def test_move_symmetric_net_zero_refreshes_references():
    f = wide_gaussian()
    cfg = AdaptiveConfig(delta=1e-3, d_max=0.05)
    e_r, e_l = exterior_error_indicators(f)
    assert e_r == pytest.approx(e_l, abs=1e-12)
    st_ = ThresholdState(1.0, 1.0, 0.9 * e_r, 0.9 * e_l, cfg.eta)
    g, ev = maybe_move(f, cfg, st_)
    assert ev is None and g.basis.x0 == 0.0
    assert st_.e_ref_right == pytest.approx(e_r) and st_.e_ref_left == pytest.approx(e_l)


def test_move_example2_first_trigger_is_leftward():
    prob = example2()
    b = BasisParams(1.2, 0.0, 24)
    f = expand(prob.initial, b)
    cfg = AdaptiveConfig(mu=1.0005, delta=5e-4, d_max=0.2, scale=False, order=False)
    st_ = fresh(f, cfg)
    prop = Propagator(b, prob.dt, prob.form)
    for k in range(200):
        f = step(f, k * prob.dt, prob.dt, prob.form, prob.source, propagator=prop)
        g, ev = maybe_move(f, cfg, st_, (k + 1) * prob.dt)
        if ev is not None:
            break
    assert ev is not None, "moving never triggered"
    assert ev.kind is EventKind.MOVE_LEFT and g.basis.x0 < 0
    assert abs(ev.after.x0 - ev.before.x0) <= cfg.d_max


def test_move_displacement_capped():
    # far-off mass: search never satisfies the threshold, so the step is d_max
    f, _ = project(SpectralField(BasisParams(2.0, 4.5, 0), [1.0]), BasisParams(1.0, 0.0, 30))
    cfg = AdaptiveConfig(delta=1e-3, d_max=0.02, move_left=False)
    st_ = ThresholdState(1.0, 1.0, 1e-3, 1.0, cfg.eta)
    g, ev = maybe_move(f, cfg, st_)
    assert ev.kind is EventKind.MOVE_RIGHT
    assert g.basis.x0 == pytest.approx(0.02, abs=1e-15)
    assert ev.ledger_increment == pytest.approx(0.02 * deriv_norm(f), rel=1e-12)


# scaling

def test_scale_dead_band():
    f = wide_gaussian()
    cfg = AdaptiveConfig()
    freq = frequency_indicator(f)
    st_ = ThresholdState(freq / 1.01, freq, 0, 0, cfg.eta)
    g, ev, refine = maybe_scale(f, cfg, st_)
    assert ev is None and not refine and g is f


def test_scale_down_reduces_frequency_monotonically():
    f = wide_gaussian()
    f0 = frequency_indicator(f)
    # the function itself: F falls all the way to the matching scale 0.5
    exact = SpectralField(BasisParams(0.5, 0.0, 0), [1.0])
    ideal = [frequency_indicator(project(exact, f.basis.replace(beta=0.99 ** n))[0])
             for n in range(0, 60)]
    assert np.all(np.diff(ideal) < 0)
    # the truncated field: monotone until its own truncation error dominates
    trail = [frequency_indicator(project(f, f.basis.replace(beta=0.99 ** n))[0]) for n in range(1, 21)]
    assert np.all(np.diff(trail) < 0) and trail[0] < f0
    cfg = AdaptiveConfig(q=0.99)
    st_ = ThresholdState(trail[9] / cfg.nu * 1.0001, 1.0, 0, 0, cfg.eta)
    g, ev, refine = maybe_scale(f, cfg, st_, t=0.5)
    assert ev.kind is EventKind.SCALE_DOWN and not refine
    # smallest n meeting the threshold is n = 10
    assert g.basis.beta == pytest.approx(0.99 ** 10, rel=1e-12)
    assert frequency_indicator(g) < f0
    assert st_.f_ref_scale == pytest.approx(frequency_indicator(g))
    assert ev.ledger_increment == pytest.approx(
        scaling_factor(1.0, g.basis.beta) * x_weighted_deriv_norm(f), rel=1e-12)


def test_scale_clamped_to_beta_min():
    f = wide_gaussian()
    f_hi = frequency_indicator(project(f, f.basis.replace(beta=0.99 ** 4))[0])
    f_lo = frequency_indicator(project(f, f.basis.replace(beta=0.955))[0])
    cfg = AdaptiveConfig(beta_min=0.955)
    st_ = ThresholdState(0.5 * (f_hi + f_lo) / cfg.nu, 1.0, 0, 0, cfg.eta)
    g, ev, _ = maybe_scale(f, cfg, st_)
    assert g.basis.beta == 0.955


def test_scale_down_fails_signals_refine():
    f = wide_gaussian()
    cfg = AdaptiveConfig(beta_min=0.9)
    st_ = ThresholdState(1e-12, 1.0, 0, 0, cfg.eta)
    g, ev, refine = maybe_scale(f, cfg, st_)
    assert ev is None and refine and g is f


def test_scale_up():
    f = wide_gaussian(beta=0.3)
    cfg = AdaptiveConfig()
    freq = frequency_indicator(f)
    st_ = ThresholdState(freq * 1.5, 1.0, 0, 0, cfg.eta)
    g, ev, _ = maybe_scale(f, cfg, st_)
    assert ev.kind is EventKind.SCALE_UP
    assert g.basis.beta == pytest.approx(0.3 / 0.99)
    assert frequency_indicator(g) <= freq * 1.5
    # clamp at beta_max
    cfg = AdaptiveConfig(beta_max=0.301)
    st_ = ThresholdState(freq * 1.5, 1.0, 0, 0, cfg.eta)
    g, ev, _ = maybe_scale(f, cfg, st_)
    assert g.basis.beta == 0.301


# order

def test_order_dead_band():
    f = wide_gaussian(0.7, 20)
    cfg = AdaptiveConfig(f_floor=0.0)
    freq = frequency_indicator(f)
    st_ = ThresholdState(freq, freq, 0, 0, cfg.eta)
    g, ev = maybe_adapt_order(f, cfg, st_)
    assert ev is None and g is f


def test_refine_capped_at_n_max():
    c = np.zeros(41)
    c[0] = 1.0
    c[38:] = 1.0
    f = SpectralField(BasisParams(1, 0, 40), c)
    cfg = AdaptiveConfig(n_max=6)
    st_ = ThresholdState(1e-3, 1e-3, 0, 0, cfg.eta)
    g, ev = maybe_adapt_order(f, cfg, st_)
    assert ev.kind is EventKind.REFINE and g.basis.n == 46
    assert ev.ledger_increment == 0.0
    assert st_.eta_current == pytest.approx(cfg.eta * cfg.gamma)
    assert st_.f_ref_order == pytest.approx(frequency_indicator(g))
    xs = np.linspace(-8, 8, 101)
    assert np.abs(synthesize(g, xs) - synthesize(f, xs)).max() <= 1e-15


def test_refine_stops_at_first_candidate():
    c = np.ones(31) * 1e-3
    c[0] = 1
    f = SpectralField(BasisParams(1, 0, 30), c)
    freq = frequency_indicator(f)
    cfg = AdaptiveConfig(n_max=6, f_floor=0.0)
    st_ = ThresholdState(freq, freq / 1.2, 0, 0, cfg.eta)
    g, ev = maybe_adapt_order(f, cfg, st_)
    from adaptive_hermite.indicators import frequency_from_coeffs
    thr = cfg.eta * freq / 1.2
    expected = next(n for n in range(31, 37) if frequency_from_coeffs(c, n) < thr)
    assert g.basis.n == expected


def test_coarsen_small_tail():
    c = np.full(13, 1e-9)
    c[0] = 1.0
    f = SpectralField(BasisParams(1, 0, 12), c)
    cfg = AdaptiveConfig()
    st_ = ThresholdState(1e-3, 1e-3, 0, 0, cfg.eta)
    g, ev = maybe_adapt_order(f, cfg, st_)
    assert ev.kind is EventKind.COARSEN and g.basis.n == cfg.n_min
    direct = math.sqrt(9 * 1e-18 * SQRT_PI)
    assert ev.ledger_increment == pytest.approx(direct, abs=1e-12)
    assert ev.ledger_increment == tail_norm(f, g.basis.n)


# whole step

def test_all_disabled_identity():
    f = wide_gaussian()
    cfg = AdaptiveConfig.disabled()
    st_ = ThresholdState(1e-9, 1e-9, 0, 0, cfg.eta)
    g, evs = controller_step(f, 0.1, cfg, st_)
    assert g is f and evs == []


huge = AdaptiveConfig(mu=1e300, nu=1e300, eta=1e300, eta0=1e300)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 30), beta=st.floats(0.3, 3), x0=st.floats(-3, 3),
       seed=st.integers(0, 2 ** 32 - 1), refs=st.lists(st.floats(1e-6, 1.0), min_size=4, max_size=4))
def test_infinite_thresholds_never_fire(n, beta, x0, seed, refs):
    rng = np.random.default_rng(seed)
    f = SpectralField(BasisParams(beta, x0, n), rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1))
    freq = max(frequency_indicator(f), huge.f_floor)
    # the scale-up trigger has no multiplier, so keep its reference at or below F
    st_ = ThresholdState(min(refs[0], freq), refs[1], refs[2], refs[3], huge.eta)
    g, evs = controller_step(f, 0.0, huge, st_)
    assert evs == [] and g is f


def translating_problem(c=1.0):
    # u = e^{-(x - ct)^2/2}: the zeroth function of the unit basis, carried along
    def u(x, t):
        return np.exp(-0.5 * (np.asarray(x) - c * t) ** 2)

    def f(x, t):
        z = np.asarray(x) - c * t
        return (c * z - z * z + 1.0) * np.exp(-0.5 * z * z)

    return ParabolicProblem("translate", BilinearForm.heat(), SourceTerm(f),
                            lambda x: u(x, 0.0), u, 0.5, 1e-3)


def test_translating_field_only_moves_right():
    prob = translating_problem()
    cfg = RunConfig(problem="custom", custom=prob, initial_basis=BasisParams(1.0, 0.0, 30),
                    keep_event_fields=True)
    rec = run(cfg)
    kinds = {e.kind for e in rec.events}
    assert kinds == {EventKind.MOVE_RIGHT}
    assert rec.summary["final_x0"] == pytest.approx(0.5, abs=0.1)
    assert rec.summary["final_rel_error"] < 1e-6


def example2_events(mode, t_final=0.4):
    adaptive = AdaptiveConfig(mu=1.0005, delta=5e-4, d_max=0.2)
    adaptive.set_move_mode(mode)
    return run(RunConfig(problem="example2", adaptive=adaptive, t_final=t_final,
                         keep_event_fields=True)).events


def test_direction_flags():
    right_only = example2_events("right")
    assert all(e.kind is not EventKind.MOVE_LEFT for e in right_only)
    both = example2_events("both")
    assert any(e.kind is EventKind.MOVE_LEFT for e in both)


def test_clamps_and_ledger_consistency():
    evs = example2_events("both") + run(RunConfig(
        problem="example1", t_final=0.2, keep_event_fields=True)).events
    cfg = AdaptiveConfig()
    assert evs
    for ev in evs:
        a, b = ev.before, ev.after
        assert cfg.beta_min <= b.beta <= cfg.beta_max
        assert abs(b.x0 - a.x0) <= 0.2 + 1e-15
        assert b.n - a.n <= cfg.n_max
        pre = ev.pre_field
        if ev.kind in (EventKind.MOVE_LEFT, EventKind.MOVE_RIGHT):
            assert (a.beta, a.n) == (b.beta, b.n)
            expected = abs(b.x0 - a.x0) * deriv_norm(pre)
        elif ev.kind in (EventKind.SCALE_UP, EventKind.SCALE_DOWN):
            assert (a.x0, a.n) == (b.x0, b.n)
            expected = scaling_factor(a.beta, b.beta) * x_weighted_deriv_norm(pre)
        elif ev.kind is EventKind.COARSEN:
            assert (a.x0, a.beta) == (b.x0, b.beta) and b.n < a.n
            expected = tail_norm(pre, b.n)
        else:
            assert (a.x0, a.beta) == (b.x0, b.beta) and b.n > a.n
            expected = 0.0
            xs = np.linspace(a.x0 - 10, a.x0 + 10, 201)
            assert np.abs(synthesize(ev.post_field, xs) - synthesize(pre, xs)).max() <= 1e-15
        assert ev.ledger_increment == pytest.approx(expected, abs=1e-10)
