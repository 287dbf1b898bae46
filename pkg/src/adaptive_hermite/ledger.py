"""Posterior error ledger: running sums of the per-event bound increments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from .basis import gauss_hermite_rule, synthesize
from .controller import AdaptationEvent, EventKind

_BUCKET = {
    EventKind.SCALE_UP: "e_scale",
    EventKind.SCALE_DOWN: "e_scale",
    EventKind.MOVE_LEFT: "e_move",
    EventKind.MOVE_RIGHT: "e_move",
    EventKind.COARSEN: "e_coarsen",
}


@dataclass(frozen=True)
class LedgerTotals:
    e_scale: float = 0.0
    e_move: float = 0.0
    e_coarsen: float = 0.0
    counts: dict = field(default_factory=lambda: {k.value: 0 for k in EventKind})

    @property
    def total(self) -> float:
        return self.e_scale + self.e_move + self.e_coarsen

    def to_dict(self) -> dict:
        return {"e_scale": self.e_scale, "e_move": self.e_move,
                "e_coarsen": self.e_coarsen, "counts": dict(self.counts)}


def record(event: AdaptationEvent, totals: LedgerTotals) -> LedgerTotals:
    """Return ``totals`` with ``event`` added."""
    if not event.ledger_increment >= 0.0:
        raise ValueError(f"negative ledger increment {event.ledger_increment}")
    counts = dict(totals.counts)
    counts[event.kind.value] = counts.get(event.kind.value, 0) + 1
    bucket = _BUCKET.get(event.kind)
    if bucket is None:
        return replace(totals, counts=counts)
    return replace(totals, counts=counts,
                   **{bucket: getattr(totals, bucket) + event.ledger_increment})


def record_all(events: Iterable[AdaptationEvent], totals: LedgerTotals | None = None) -> LedgerTotals:
    totals = totals or LedgerTotals()
    for ev in events:
        totals = record(ev, totals)
    return totals


@dataclass(frozen=True)
class BoundCheck:
    kind: str
    time: float
    error_before: float
    error_after: float
    ledger_increment: float
    slack: float

    @property
    def jump(self) -> float:
        return self.error_after - self.error_before

    @property
    def passed(self) -> bool:
        return self.jump <= self.ledger_increment + self.slack


@dataclass(frozen=True)
class BoundReport:
    rows: tuple

    @property
    def failures(self) -> list:
        return [r for r in self.rows if not r.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def table(self) -> str:
        lines = [f"{'kind':<10} {'t':>10} {'jump':>12} {'ledger':>12}  ok"]
        for r in self.rows:
            lines.append(f"{r.kind:<10} {r.time:>10.4f} {r.jump:>12.3e} "
                         f"{r.ledger_increment:>12.3e}  {'yes' if r.passed else 'NO'}")
        return "\n".join(lines)


def _event_rule(ev: AdaptationEvent):
    # one rule for both sides of the event: the wider scale, the larger order
    b0, b1 = ev.before, ev.after
    beta = min(b0.beta, b1.beta)
    x0 = 0.5 * (b0.x0 + b1.x0)
    rule = gauss_hermite_rule(4 * (max(b0.n, b1.n) + 1) + 16)
    return x0 + rule.nodes / beta, rule.function_weights / beta


def verify_bound(events: Iterable[AdaptationEvent], analytic: Callable,
                 slack: float = 1e-9) -> BoundReport:
    """Check every event's measured error jump against its ledger increment.

    The events must carry their pre- and post-event fields.
    """
    rows = []
    for ev in events:
        if ev.pre_field is None or ev.post_field is None:
            raise ValueError("event was recorded without its fields")
        xs, w = _event_rule(ev)
        u = np.asarray(analytic(xs, ev.time), dtype=complex)
        before = math.sqrt(float(np.dot(w, np.abs(u - synthesize(ev.pre_field, xs)) ** 2)))
        after = math.sqrt(float(np.dot(w, np.abs(u - synthesize(ev.post_field, xs)) ** 2)))
        rows.append(BoundCheck(ev.kind.value, ev.time, before, after,
                               ev.ledger_increment, slack))
    return BoundReport(tuple(rows))
