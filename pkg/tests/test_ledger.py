import math

import numpy as np
import pytest

from adaptive_hermite.basis import BasisParams, SpectralField
from adaptive_hermite.controller import AdaptationEvent, AdaptiveConfig, EventKind
from adaptive_hermite.experiments import RunConfig, run
from adaptive_hermite.ledger import LedgerTotals, record, record_all, verify_bound
from adaptive_hermite.problems import example2
from adaptive_hermite.spectral_ops import project, tail_norm

B = BasisParams(1.0, 0.0, 10)


def ev(kind, inc, before=B, after=B):
    return AdaptationEvent(kind, 0.0, before, after, inc)


def test_refine_only_counts():
    t = record(ev(EventKind.REFINE, 0.0, after=B.replace(n=12)), LedgerTotals())
    assert (t.e_scale, t.e_move, t.e_coarsen) == (0.0, 0.0, 0.0)
    assert t.counts["Refine"] == 1


def test_move_and_scale_increments():
    t = record(ev(EventKind.MOVE_RIGHT, 0.001 * 2.0), LedgerTotals())
    assert t.e_move == pytest.approx(0.002, abs=1e-18)
    x_norm = 1.7
    inc = 0.01 * math.sqrt(1.99) / (math.sqrt(2) * 0.99) * x_norm
    t = record(ev(EventKind.SCALE_DOWN, inc, after=B.replace(beta=0.99)), t)
    assert t.e_scale == inc and t.counts["ScaleDown"] == 1 and t.counts["MoveRight"] == 1


def test_negative_increment_rejected():
    with pytest.raises(ValueError):
        record(ev(EventKind.COARSEN, -1e-3), LedgerTotals())
    with pytest.raises(ValueError):
        record(ev(EventKind.COARSEN, math.nan), LedgerTotals())


def test_totals_are_sums_and_monotone():
    rng = np.random.default_rng(0)
    kinds = list(EventKind)
    events = [ev(kinds[i], float(x)) if kinds[i] is not EventKind.REFINE else ev(EventKind.REFINE, 0.0)
              for i, x in zip(rng.integers(0, 6, 300), rng.random(300))]
    totals, trail = LedgerTotals(), []
    for e in events:
        totals = record(e, totals)
        trail.append((totals.e_scale, totals.e_move, totals.e_coarsen))
    assert np.all(np.diff(np.array(trail), axis=0) >= 0)
    for name, group in (("e_scale", ("ScaleUp", "ScaleDown")), ("e_move", ("MoveLeft", "MoveRight")),
                        ("e_coarsen", ("Coarsen",))):
        direct = math.fsum(e.ledger_increment for e in events if e.kind.value in group)
        assert getattr(totals, name) == pytest.approx(direct, abs=1e-12)
    assert record_all(events).to_dict() == totals.to_dict()
    assert sum(totals.counts.values()) == 300


def test_zero_adaptation_run():
    rec = run(RunConfig(problem="example2", adaptive=AdaptiveConfig.disabled(), t_final=0.1))
    assert rec.events == []
    assert rec.totals.e_scale == rec.totals.e_move == rec.totals.e_coarsen == 0.0
    assert verify_bound(rec.events, example2().analytic).rows == ()


def test_verify_requires_fields():
    with pytest.raises(ValueError):
        verify_bound([ev(EventKind.COARSEN, 0.1)], lambda x, t: 0 * x)


def test_coarsen_bound_is_tight_when_exact():
    # u lies in the order-40 space and U = u, so the jump is the discarded tail itself
    g = SpectralField(BasisParams(0.5, 0.3, 0), [1.0])
    u_field, _ = project(g, BasisParams(1.0, 0.0, 40))
    analytic = lambda x, t: u_field(x)
    after = u_field.basis.replace(n=12)
    post, _ = project(u_field, after)
    inc = tail_norm(u_field, 12)
    assert inc > 1e-6
    event = AdaptationEvent(EventKind.COARSEN, 0.0, u_field.basis, after, inc, u_field, post)
    report = verify_bound([event], analytic)
    row = report.rows[0]
    assert report.passed
    assert row.error_before < 1e-13
    assert row.jump == pytest.approx(inc, abs=1e-9)
    assert "Coarsen" in report.table()


def test_loose_increment_fails():
    g = SpectralField(BasisParams(0.5, 0.0, 0), [1.0])
    u_field, _ = project(g, BasisParams(1.0, 0.0, 30))
    after = u_field.basis.replace(n=8)
    post, _ = project(u_field, after)
    event = AdaptationEvent(EventKind.COARSEN, 0.0, u_field.basis, after, 0.0, u_field, post)
    report = verify_bound([event], lambda x, t: u_field(x))
    assert not report.passed and len(report.failures) == 1


def test_example2_move_jumps_within_ledger():
    adaptive = AdaptiveConfig(mu=1.0005, delta=5e-4, d_max=0.2, scale=False, order=False)
    rec = run(RunConfig(problem="example2", adaptive=adaptive, t_final=0.5, keep_event_fields=True))
    assert len(rec.events) > 10
    report = verify_bound(rec.events, example2().analytic)
    assert report.passed, report.table()
