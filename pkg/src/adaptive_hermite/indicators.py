"""Frequency and exterior-error indicators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .basis import SpectralField, gauss_hermite_rule, synthesize
from .spectral_ops import differentiate


class DegenerateIndicator(ValueError):
    """Indicator is 0/0 (zero field or zero derivative)."""


@dataclass(frozen=True)
class IndicatorSnapshot:
    frequency: float
    right_exterior: float
    left_exterior: float
    x_left: float
    x_right: float
    m_cut: int


@lru_cache(maxsize=64)
def _unit_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def m_cut(n: int) -> int:
    return n // 3


def frequency_from_coeffs(coeffs: np.ndarray, n: int | None = None) -> float:
    """Frequency indicator of coefficients ``coeffs`` viewed as an order-``n`` expansion.

    ``n`` may exceed ``len(coeffs) - 1``; missing coefficients are zeros.
    """
    c = np.asarray(coeffs)
    if n is None:
        n = c.size - 1
    if n < 3:
        raise DegenerateIndicator(f"frequency indicator needs N >= 3, got {n}")
    power = (c.real ** 2 + c.imag ** 2)
    total = float(power.sum())
    if total == 0.0:
        raise DegenerateIndicator("zero field")
    start = n - m_cut(n) + 1
    return math.sqrt(float(power[start:n + 1].sum()) / total)


def frequency_indicator(field: SpectralField) -> float:
    return frequency_from_coeffs(field.coeffs, field.basis.n)


def exterior_points(n: int) -> tuple[float, float]:
    """Reference nodes (xi_L, xi_R) in the unscaled variable."""
    nodes = gauss_hermite_rule(n + 1).nodes
    return float(nodes[n // 3]), float(nodes[(2 * n + 2) // 3])


class ExteriorEvaluator:
    """Restricted derivative norms of one field, reusable across window shifts.

    ``shift`` moves the exterior windows by a displacement; a shift ``d``
    gives the indicators the field would have on a basis displaced by ``d``.

    ``method="legendre"`` integrates |dU/dx|^2 over the exterior interval
    with Gauss-Legendre (the integrand is a polynomial times a Gaussian, so
    the interval is truncated where the Gaussian is below 1e-60).
    ``method="nodes"`` instead sums Gauss-Hermite terms at the nodes that fall
    inside the window, the cheaper collocation-style estimate.
    """

    def __init__(self, field: SpectralField, method: str = "legendre"):
        b = field.basis
        if b.n < 3:
            raise DegenerateIndicator(f"exterior indicators need N >= 3, got {b.n}")
        if method not in ("legendre", "nodes"):
            raise ValueError(f"unknown restricted-norm method {method!r}")
        self.basis = b
        self.method = method
        self.deriv = differentiate(field)
        total = self.deriv.norm() ** 2
        if total == 0.0:
            raise DegenerateIndicator("zero derivative")
        self.total = total
        self.xi_left, self.xi_right = exterior_points(b.n)
        if method == "legendre":
            # past the turning point sqrt(2n+3) every mode decays like exp(-y^2/2)
            self._reach = math.sqrt(2.0 * b.n + 5.0) + 12.0
            self._gl = _unit_legendre(2 * b.n + 64)
        else:
            rule = gauss_hermite_rule(2 * (b.n + 2))
            right = rule.nodes > self.xi_right
            left = rule.nodes < self.xi_left
            self._right = (rule.nodes[right], rule.function_weights[right] / b.beta)
            self._left = (rule.nodes[left], rule.function_weights[left] / b.beta)

    def _legendre(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        # lo, hi in the scaled variable y = beta (x - x0); returns integral over x
        b = self.basis
        t, w = self._gl
        width = np.maximum(hi - lo, 0.0)
        ys = lo[:, None] + width[:, None] * t[None, :]
        g = synthesize(self.deriv, b.x0 + ys / b.beta)
        return (np.abs(g) ** 2) @ w * width / b.beta

    def _nodes(self, nodes, weights, shifts) -> np.ndarray:
        b = self.basis
        xs = b.x0 + shifts[:, None] + nodes[None, :] / b.beta
        g = synthesize(self.deriv, xs)
        return (np.abs(g) ** 2) @ weights

    def right(self, shifts=0.0) -> np.ndarray:
        shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
        if self.method == "legendre":
            lo = self.xi_right + self.basis.beta * shifts
            part = self._legendre(lo, np.full_like(lo, self._reach))
        else:
            part = self._nodes(*self._right, shifts)
        return np.sqrt(np.clip(part / self.total, 0.0, 1.0))

    def left(self, shifts=0.0) -> np.ndarray:
        shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
        if self.method == "legendre":
            hi = self.xi_left + self.basis.beta * shifts
            part = self._legendre(np.full_like(hi, -self._reach), hi)
        else:
            part = self._nodes(*self._left, shifts)
        return np.sqrt(np.clip(part / self.total, 0.0, 1.0))


def exterior_error_indicators(field: SpectralField,
                              method: str = "legendre") -> tuple[float, float]:
    """Right and left exterior-error indicators ``(E_R, E_L)``."""
    ev = ExteriorEvaluator(field, method)
    return float(ev.right()[0]), float(ev.left()[0])


def snapshot(field: SpectralField) -> IndicatorSnapshot:
    b = field.basis
    xi_l, xi_r = exterior_points(b.n)
    try:
        freq = frequency_indicator(field)
    except DegenerateIndicator:
        freq = math.nan
    try:
        e_r, e_l = exterior_error_indicators(field)
    except DegenerateIndicator:
        e_r = e_l = math.nan
    return IndicatorSnapshot(freq, e_r, e_l, b.x0 + xi_l / b.beta,
                             b.x0 + xi_r / b.beta, m_cut(b.n))
