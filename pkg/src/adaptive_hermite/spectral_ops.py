"""Basis-change operators and exact coefficient maps."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .basis import (
    BasisParams,
    SpectralField,
    analyze,
    collocation_points,
    gauss_hermite_rule,
    hermite_function_table,
    synthesize,
)


@dataclass(frozen=True)
class OperatorReport:
    source_basis: BasisParams
    target_basis: BasisParams
    discarded_norm: float


# a failed scale-down search revisits ~100 targets from one source per step
@lru_cache(maxsize=1024)
def _gram(source: BasisParams, target: BasisParams) -> np.ndarray:
    """Cross inner products (H_i^source, H_j^target), shape (n_t+1, n_s+1).

    The product of two shifted Gaussians is a single Gaussian centred at
    ``c`` with width ``s``; a Gauss-Hermite rule in ``z = s (x - c)`` is exact
    for the polynomial factor.
    """
    bs, bt = source.beta, target.beta
    a2, b2 = bs * bs, bt * bt
    centre = (a2 * source.x0 + b2 * target.x0) / (a2 + b2)
    s = math.sqrt(0.5 * (a2 + b2))
    m = (source.n + target.n) // 2 + 2
    rule = gauss_hermite_rule(m)
    xs = centre + rule.nodes / s
    hs = hermite_function_table(source.n, bs * (xs - source.x0))
    ht = hermite_function_table(target.n, bt * (xs - target.x0))
    g = (ht * (rule.function_weights / s)) @ hs.T
    g.setflags(write=False)
    return g


def projection_matrix(source: BasisParams, target: BasisParams) -> np.ndarray:
    """Matrix mapping source coefficients to Galerkin-projected target ones."""
    if source == target:
        return np.eye(source.size)
    if source.beta == target.beta and source.x0 == target.x0:
        p = np.zeros((target.size, source.size))
        k = min(source.size, target.size)
        p[np.arange(k), np.arange(k)] = 1.0
        return p
    return _gram(source, target) / target.norm_sq


def project(field: SpectralField, target: BasisParams) -> tuple[SpectralField, OperatorReport]:
    """L2-orthogonal projection of ``field`` onto the span of ``target``."""
    src = field.basis
    if src.beta == target.beta and src.x0 == target.x0:
        # pure truncation / zero padding: no quadrature involved
        coeffs = np.zeros(target.size, dtype=complex)
        k = min(src.size, target.size)
        coeffs[:k] = field.coeffs[:k]
        discarded = tail_norm(field, target.n) if target.n < src.n else 0.0
        out = SpectralField(target, coeffs)
    else:
        out = SpectralField(target, projection_matrix(src, target) @ field.coeffs)
        gap = field.norm() ** 2 - out.norm() ** 2
        discarded = math.sqrt(max(gap, 0.0))
    return out, OperatorReport(src, target, discarded)


def interpolate(field: SpectralField, target: BasisParams) -> SpectralField:
    """Collocation transfer: match ``field`` at the target collocation points."""
    return analyze(synthesize(field, collocation_points(target)), target)


def derivative_matrix(n: int, beta: float) -> np.ndarray:
    """(n+2) x (n+1) map from coefficients of U to those of dU/dx."""
    d = np.zeros((n + 2, n + 1))
    k = np.arange(n + 1)
    # d/dx H_k = beta (sqrt(k/2) H_{k-1} - sqrt((k+1)/2) H_{k+1})
    d[k[1:] - 1, k[1:]] = beta * np.sqrt(k[1:] / 2.0)
    d[k + 1, k] = -beta * np.sqrt((k + 1) / 2.0)
    return d


def multiply_by_x_matrix(n: int, beta: float, shift: float) -> np.ndarray:
    """(n+2) x (n+1) map for multiplication by ``(x - origin)``, ``shift = x0 - origin``."""
    m = np.zeros((n + 2, n + 1))
    k = np.arange(n + 1)
    m[k, k] = shift
    m[k[1:] - 1, k[1:]] = np.sqrt(k[1:] / 2.0) / beta
    m[k + 1, k] = np.sqrt((k + 1) / 2.0) / beta
    return m


def differentiate(field: SpectralField) -> SpectralField:
    b = field.basis
    return SpectralField(b.replace(n=b.n + 1), derivative_matrix(b.n, b.beta) @ field.coeffs)


def deriv_norm(field: SpectralField) -> float:
    """Exact ||dU/dx||."""
    return differentiate(field).norm()


def x_weighted_deriv_norm(field: SpectralField, origin: float | None = None) -> float:
    """Exact ||(x - origin) dU/dx||; ``origin`` defaults to the basis displacement.

    Rescaling a basis dilates about its displacement, so that is the centre
    for which the scaling-error bound holds. Pass ``origin=0.0`` for the
    literal weight ``x``.
    """
    b = field.basis
    if origin is None:
        origin = b.x0
    g = differentiate(field)
    xg = multiply_by_x_matrix(g.basis.n, b.beta, b.x0 - origin) @ g.coeffs
    return math.sqrt(float(np.vdot(xg, xg).real) * b.norm_sq)


def tail_norm(field: SpectralField, keep: int) -> float:
    """||(I - pi_keep) U||: norm of the modes above index ``keep``."""
    n = field.basis.n
    if not 0 <= keep <= n:
        raise ValueError(f"keep must lie in 0..{n}, got {keep}")
    tail = field.coeffs[keep + 1:]
    return math.sqrt(float(np.vdot(tail, tail).real) * field.basis.norm_sq)


def h1_norm_sq(field: SpectralField) -> float:
    return field.norm() ** 2 + deriv_norm(field) ** 2
