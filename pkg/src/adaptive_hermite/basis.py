"""Generalized Hermite functions, Gauss-Hermite rules and the discrete transform.

The basis functions follow the unnormalized convention

    H_i^beta(x - x0) = H_i(beta (x - x0)) exp(-(beta (x - x0))**2 / 2) / sqrt(2**i i!)

so every basis function has squared L2 norm ``sqrt(pi) / beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class BasisParams:
    """Scaling factor ``beta``, displacement ``x0`` and highest index ``n``."""

    beta: float
    x0: float
    n: int

    def __post_init__(self):
        beta = float(self.beta)
        if not (beta > 0.0 and math.isfinite(beta)):
            raise ValueError(f"beta must be positive and finite, got {self.beta!r}")
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"n must be a nonnegative integer, got {self.n!r}")
        x0 = float(self.x0)
        if not math.isfinite(x0):
            raise ValueError(f"x0 must be finite, got {self.x0!r}")
        # canonicalize -0.0 so equality is bitwise on the stored reals
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "x0", x0 + 0.0)
        object.__setattr__(self, "n", int(self.n))

    @property
    def size(self) -> int:
        return self.n + 1

    @property
    def norm_sq(self) -> float:
        """Squared L2 norm shared by every basis function."""
        return SQRT_PI / self.beta

    def replace(self, **changes) -> "BasisParams":
        values = {"beta": self.beta, "x0": self.x0, "n": self.n}
        values.update(changes)
        return BasisParams(**values)

    def to_dict(self) -> dict:
        return {"beta": self.beta, "x0": self.x0, "n": self.n}


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss-Hermite rule for the weight exp(-xi**2).

    ``function_weights`` integrate functions that already carry the Gaussian
    factor, i.e. ``sum(function_weights * g(nodes)) ~ integral of g``.
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray
    function_weights: np.ndarray = field(repr=False)

    def integrate(self, values) -> complex:
        return np.dot(self.weights, values)


def hermite_polynomial(n: int, x):
    """Physicists' Hermite polynomial H_n by three-term recurrence."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = 2.0 * x
    for k in range(1, n):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return h if h.ndim else float(h)


def hermite_function_table(n: int, y) -> np.ndarray:
    """Rows ``0..n`` of the normalized functions H_i(y) exp(-y^2/2)/sqrt(2^i i!).

    Returns an array of shape ``(n + 1,) + y.shape``.
    """
    y = np.asarray(y, dtype=float)
    out = np.empty((n + 1,) + y.shape)
    out[0] = np.exp(-0.5 * y * y)
    if n >= 1:
        out[1] = math.sqrt(2.0) * y * out[0]
    for k in range(1, n):
        out[k + 1] = (math.sqrt(2.0 / (k + 1)) * y * out[k]
                      - math.sqrt(k / (k + 1)) * out[k - 1])
    return out


def hermite_function(i: int, basis: BasisParams, x):
    """Evaluate the ``i``-th generalized Hermite function of ``basis`` at ``x``."""
    if not 0 <= i <= basis.n:
        raise IndexError(f"index {i} outside 0..{basis.n}")
    y = basis.beta * (np.asarray(x, dtype=float) - basis.x0)
    val = hermite_function_table(i, y)[i]
    return val if val.ndim else float(val)


def _log_christoffel(nodes: np.ndarray) -> np.ndarray:
    """log of m * p_{m-1}(xi)^2 / sqrt(pi), p_k = Hhat_k e^{xi^2/2}.

    The weights are sqrt(pi) / (m p_{m-1}^2) and the function weights carry an
    extra e^{xi^2}. The recurrence runs on the polynomial part with rescaling,
    so neither factor under- or overflows for large rules.
    """
    m = nodes.size
    p_prev = np.zeros_like(nodes)
    p = np.ones_like(nodes)
    log_scale = np.zeros_like(nodes)
    for k in range(m - 1):
        p_prev, p = p, math.sqrt(2.0 / (k + 1)) * nodes * p - math.sqrt(k / (k + 1)) * p_prev
        big = np.abs(p) > 1e150
        if big.any():
            p[big] *= 1e-150
            p_prev[big] *= 1e-150
            log_scale[big] += 150.0 * math.log(10.0)
    return math.log(m) - 0.5 * math.log(math.pi) + 2.0 * (np.log(np.abs(p)) + log_scale)


@lru_cache(maxsize=256)
def gauss_hermite_rule(m: int) -> QuadratureRule:
    """Golub-Welsch Gauss-Hermite rule with ``m`` nodes."""
    if int(m) != m or m < 1:
        raise ValueError(f"rule order must be a positive integer, got {m!r}")
    m = int(m)
    if m == 1:
        nodes = np.zeros(1)
    else:
        offdiag = np.sqrt(np.arange(1, m) / 2.0)
        try:
            nodes = eigh_tridiagonal(np.zeros(m), offdiag, eigvals_only=True)
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(
                f"Jacobi eigen-solve failed for Gauss-Hermite order {m}: {exc}") from exc
        nodes = np.sort(nodes)
        nodes = 0.5 * (nodes - nodes[::-1])
        if m % 2:
            nodes[m // 2] = 0.0
    log_c = _log_christoffel(nodes)
    log_c = 0.5 * (log_c + log_c[::-1])
    weights = np.exp(-log_c)
    fweights = np.exp(nodes * nodes - log_c)
    for arr in (nodes, weights, fweights):
        arr.setflags(write=False)
    return QuadratureRule(m, nodes, weights, fweights)


def collocation_points(basis: BasisParams) -> np.ndarray:
    rule = gauss_hermite_rule(basis.n + 1)
    return basis.x0 + rule.nodes / basis.beta


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficients ``coeffs[i]`` of the expansion over ``basis``."""

    basis: BasisParams
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (self.basis.size,):
            raise ValueError(
                f"expected {self.basis.size} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def norm(self) -> float:
        return math.sqrt(float(np.vdot(self.coeffs, self.coeffs).real) * self.basis.norm_sq)

    def __call__(self, xs):
        return synthesize(self, xs)

    def with_basis(self, basis: BasisParams, coeffs) -> "SpectralField":
        return SpectralField(basis, coeffs)


def synthesize(field: SpectralField, xs) -> np.ndarray:
    """Evaluate the expansion at ``xs`` with one recurrence sweep per point."""
    b = field.basis
    xs = np.asarray(xs, dtype=float)
    y = b.beta * (xs - b.x0)
    c = field.coeffs
    h_prev = np.exp(-0.5 * y * y)
    acc = c[0] * h_prev
    if b.n == 0:
        return acc
    h = math.sqrt(2.0) * y * h_prev
    acc = acc + c[1] * h
    for k in range(1, b.n):
        h_prev, h = h, (math.sqrt(2.0 / (k + 1)) * y * h
                        - math.sqrt(k / (k + 1)) * h_prev)
        acc = acc + c[k + 1] * h
    return acc


@lru_cache(maxsize=256)
def _analysis_matrix(n: int) -> np.ndarray:
    rule = gauss_hermite_rule(n + 1)
    table = hermite_function_table(n, rule.nodes)
    mat = table * rule.function_weights / SQRT_PI
    mat.setflags(write=False)
    return mat


def analyze(values, basis: BasisParams) -> SpectralField:
    """Interpolate samples taken at ``collocation_points(basis)``."""
    v = np.asarray(values, dtype=complex)
    if v.shape != (basis.size,):
        raise ValueError(
            f"expected {basis.size} samples at the collocation points, got shape {v.shape}")
    return SpectralField(basis, _analysis_matrix(basis.n) @ v)
