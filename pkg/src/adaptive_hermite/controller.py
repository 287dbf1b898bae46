"""Adaptive control of the scaling factor, displacement and expansion order.

Each step runs MOVE, then SCALE, then REFINE/COARSEN. Every basis change is a
Galerkin projection, and each event carries the error-bound increment it adds
to the posterior ledger.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .basis import SpectralField
from .indicators import (
    DegenerateIndicator,
    ExteriorEvaluator,
    frequency_from_coeffs,
    frequency_indicator,
)
from .spectral_ops import deriv_norm, project, projection_matrix, tail_norm, x_weighted_deriv_norm


class EventKind(str, Enum):
    MOVE_RIGHT = "MoveRight"
    MOVE_LEFT = "MoveLeft"
    SCALE_UP = "ScaleUp"
    SCALE_DOWN = "ScaleDown"
    REFINE = "Refine"
    COARSEN = "Coarsen"


@dataclass
class AdaptiveConfig:
    q: float = 0.99
    nu: float = 1.02
    delta: float = 1e-4
    mu: float = 1.00005
    eta: float = 1.05
    eta0: float = 1.02
    gamma: float = 1.02
    d_max: float = 0.01
    n_max: int = 6
    beta_min: float = 0.2
    beta_max: float = 5.0
    move: bool = True
    scale: bool = True
    order: bool = True
    move_left: bool = True
    move_right: bool = True
    # smallest order coarsening may reach; the indicators need N >= 3
    n_min: int = 3
    # frequency values below this are treated as unresolvable roundoff
    f_floor: float = 1e-8
    # re-record the exterior references after an order change
    refresh_exterior: bool = True
    exterior_method: str = "legendre"

    def validate(self) -> "AdaptiveConfig":
        problems = []
        if not 0.0 < self.q < 1.0:
            problems.append("q must lie in (0, 1)")
        for name in ("nu", "mu", "eta0"):
            if not getattr(self, name) > 1.0:
                problems.append(f"{name} must exceed 1")
        if not self.eta >= self.eta0:
            problems.append("eta must be >= eta0")
        if not self.gamma >= 1.0:
            problems.append("gamma must be >= 1")
        if not 0.0 < self.beta_min < self.beta_max:
            problems.append("need 0 < beta_min < beta_max")
        if not 0.0 < self.delta <= self.d_max:
            problems.append("need 0 < delta <= d_max")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            problems.append("n_max must be a positive integer")
        if not self.f_floor >= 0.0:
            problems.append("f_floor must be nonnegative")
        if self.n_min < 3:
            problems.append("n_min must be at least 3")
        if self.exterior_method not in ("legendre", "nodes"):
            problems.append("exterior_method must be 'legendre' or 'nodes'")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    @classmethod
    def disabled(cls, **kw) -> "AdaptiveConfig":
        kw.setdefault("move", False)
        kw.setdefault("scale", False)
        kw.setdefault("order", False)
        return cls(**kw)

    def set_move_mode(self, mode: str) -> None:
        if mode not in ("off", "left", "right", "both"):
            raise ValueError(f"unknown move mode {mode!r}")
        self.move = mode != "off"
        self.move_left = mode in ("left", "both")
        self.move_right = mode in ("right", "both")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ThresholdState:
    f_ref_scale: float
    f_ref_order: float
    e_ref_right: float
    e_ref_left: float
    eta_current: float

    @classmethod
    def initial(cls, field: SpectralField, cfg: AdaptiveConfig) -> "ThresholdState":
        try:
            f = _freq(field, cfg)
        except DegenerateIndicator:
            f = cfg.f_floor
        try:
            ev = ExteriorEvaluator(field, cfg.exterior_method)
            e_r, e_l = float(ev.right()[0]), float(ev.left()[0])
        except DegenerateIndicator:
            e_r = e_l = 0.0
        return cls(f, f, e_r, e_l, cfg.eta)


@dataclass
class AdaptationEvent:
    kind: EventKind
    time: float
    before: object
    after: object
    ledger_increment: float
    # pre/post fields, kept only when a run asks for bound verification
    pre_field: SpectralField | None = None
    post_field: SpectralField | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "t": self.time,
            "before": self.before.to_dict(),
            "after": self.after.to_dict(),
            "ledger_increment": self.ledger_increment,
        }


def _freq(field: SpectralField, cfg: AdaptiveConfig) -> float:
    return max(frequency_indicator(field), cfg.f_floor)


def _freq_coeffs(coeffs, n, cfg: AdaptiveConfig) -> float:
    return max(frequency_from_coeffs(coeffs, n), cfg.f_floor)


def _trial_freq(field: SpectralField, beta: float, cfg: AdaptiveConfig) -> float:
    # frequency of the projection onto the rescaled basis, without building the field
    target = field.basis.replace(beta=beta)
    return _freq_coeffs(projection_matrix(field.basis, target) @ field.coeffs, target.n, cfg)


def scaling_factor(beta: float, beta_new: float) -> float:
    """|b~ - b| sqrt(1 + b~/b) / (sqrt(2) b~), the multiplier of ||x dU/dx||."""
    return abs(beta_new - beta) * math.sqrt(1.0 + beta_new / beta) / (math.sqrt(2.0) * beta_new)


def _first_below(values_fn, start: int, stop: int, threshold: float) -> int | None:
    """Smallest i in [start, stop) with values_fn(i) < threshold.

    Candidates are evaluated in growing chunks since most searches end early.
    """
    chunk = 8
    while start < stop:
        idx = np.arange(start, min(start + chunk, stop))
        hit = np.nonzero(values_fn(idx) < threshold)[0]
        if hit.size:
            return int(idx[hit[0]])
        start += chunk
        chunk *= 4
    return None


def _search_displacement(evaluate, current: float, cfg: AdaptiveConfig, threshold: float) -> float:
    """min(n delta, d_max) for the smallest n >= 0 with evaluate(n delta) < threshold."""
    if current < threshold:
        return 0.0
    n_cap = math.ceil(cfg.d_max / cfg.delta - 1e-12)
    n = _first_below(lambda i: evaluate(i * cfg.delta), 1, n_cap + 1, threshold)
    if n is None:
        return cfg.d_max
    return min(n * cfg.delta, cfg.d_max)


def _record_exterior(field: SpectralField, cfg: AdaptiveConfig, st: ThresholdState) -> None:
    try:
        ev = ExteriorEvaluator(field, cfg.exterior_method)
    except DegenerateIndicator:
        return
    st.e_ref_right, st.e_ref_left = float(ev.right()[0]), float(ev.left()[0])


def _reordered(field: SpectralField, cfg: AdaptiveConfig, st: ThresholdState) -> None:
    # x_L, x_R sit at node indices that depend on N: after an order change the
    # old references belong to a different indicator. Scaling keeps the nodes.
    if cfg.move and cfg.refresh_exterior:
        _record_exterior(field, cfg, st)


def maybe_move(field: SpectralField, cfg: AdaptiveConfig, st: ThresholdState,
               t: float = 0.0) -> tuple[SpectralField, AdaptationEvent | None]:
    """Bidirectional moving; updates the exterior references in ``st``."""
    if not cfg.move or not (cfg.move_left or cfg.move_right):
        return field, None
    try:
        ev = ExteriorEvaluator(field, cfg.exterior_method)
    except DegenerateIndicator:
        return field, None
    thr_r = cfg.mu * st.e_ref_right
    thr_l = cfg.mu * st.e_ref_left
    e_r = float(ev.right()[0])
    e_l = float(ev.left()[0])
    triggered = (cfg.move_right and e_r > thr_r) or (cfg.move_left and e_l > thr_l)
    if not triggered:
        return field, None
    d_r = _search_displacement(ev.right, e_r, cfg, thr_r) if cfg.move_right else 0.0
    d_l = _search_displacement(lambda d: ev.left(-d), e_l, cfg, thr_l) if cfg.move_left else 0.0
    net = d_r - d_l
    event = None
    if net != 0.0:
        before = field.basis
        after = before.replace(x0=before.x0 + net)
        increment = abs(net) * deriv_norm(field)
        new, _ = project(field, after)
        kind = EventKind.MOVE_RIGHT if net > 0 else EventKind.MOVE_LEFT
        event = AdaptationEvent(kind, t, before, after, increment, field, new)
        field = new
    _record_exterior(field, cfg, st)
    return field, event


def _scale_to(field: SpectralField, beta_new: float, t: float, kind: EventKind):
    before = field.basis
    after = before.replace(beta=beta_new)
    increment = scaling_factor(before.beta, beta_new) * x_weighted_deriv_norm(field)
    new, _ = project(field, after)
    return new, AdaptationEvent(kind, t, before, after, increment, field, new)


def maybe_scale(field: SpectralField, cfg: AdaptiveConfig, st: ThresholdState,
                t: float = 0.0) -> tuple[SpectralField, AdaptationEvent | None, bool]:
    """Scaling technique; returns ``(field, event, refine_needed)``."""
    if not cfg.scale:
        return field, None, False
    try:
        f = _freq(field, cfg)
    except DegenerateIndicator:
        return field, None, False
    beta = field.basis.beta
    if f > cfg.nu * st.f_ref_scale:
        threshold = cfg.nu * st.f_ref_scale
        candidate = beta
        while candidate > cfg.beta_min:
            candidate = max(candidate * cfg.q, cfg.beta_min)
            candidate = min(candidate, cfg.beta_max)
            try:
                f_new = _trial_freq(field, candidate, cfg)
            except DegenerateIndicator:
                continue
            if f_new < threshold:
                new, event = _scale_to(field, candidate, t, EventKind.SCALE_DOWN)
                st.f_ref_scale = _freq(new, cfg)
                return new, event, False
        return field, None, True
    if f < st.f_ref_scale:
        candidate = min(beta / cfg.q, cfg.beta_max)
        if candidate <= beta:
            return field, None, False
        try:
            f_new = _trial_freq(field, candidate, cfg)
        except DegenerateIndicator:
            return field, None, False
        if f_new <= st.f_ref_scale:
            new, event = _scale_to(field, candidate, t, EventKind.SCALE_UP)
            st.f_ref_scale = _freq(new, cfg)
            return new, event, False
    return field, None, False


def maybe_adapt_order(field: SpectralField, cfg: AdaptiveConfig, st: ThresholdState,
                      refine_needed: bool = False,
                      t: float = 0.0) -> tuple[SpectralField, AdaptationEvent | None]:
    """p-adaptivity: refine by zero padding or coarsen by truncation."""
    if not cfg.order:
        return field, None
    try:
        f = _freq(field, cfg)
    except DegenerateIndicator:
        return field, None
    b = field.basis
    c = field.coeffs
    if refine_needed or f > st.eta_current * st.f_ref_order:
        threshold = st.eta_current * st.f_ref_order
        n_new = b.n + cfg.n_max
        for cand in range(b.n + 1, b.n + cfg.n_max + 1):
            if _freq_coeffs(c, cand, cfg) < threshold:
                n_new = cand
                break
        after = b.replace(n=n_new)
        new, _ = project(field, after)
        event = AdaptationEvent(EventKind.REFINE, t, b, after, 0.0, field, new)
        st.eta_current *= cfg.gamma
        st.f_ref_order = st.f_ref_scale = _freq(new, cfg)
        _reordered(new, cfg, st)
        return new, event
    if f < st.f_ref_order / cfg.eta0 and b.n > cfg.n_min:
        threshold = cfg.eta0 * st.f_ref_order
        for cand in range(cfg.n_min, b.n):
            try:
                ok = _freq_coeffs(c[: cand + 1], None, cfg) <= threshold
            except DegenerateIndicator:
                continue
            if ok:
                after = b.replace(n=cand)
                increment = tail_norm(field, cand)
                new, _ = project(field, after)
                event = AdaptationEvent(EventKind.COARSEN, t, b, after, increment, field, new)
                st.f_ref_order = st.f_ref_scale = _freq(new, cfg)
                _reordered(new, cfg, st)
                return new, event
    return field, None


def controller_step(field: SpectralField, t: float, cfg: AdaptiveConfig,
                    st: ThresholdState) -> tuple[SpectralField, list[AdaptationEvent]]:
    events = []
    field, ev = maybe_move(field, cfg, st, t)
    if ev is not None:
        events.append(ev)
    field, ev, refine_needed = maybe_scale(field, cfg, st, t)
    if ev is not None:
        events.append(ev)
    field, ev = maybe_adapt_order(field, cfg, st, refine_needed, t)
    if ev is not None:
        events.append(ev)
    return field, events
