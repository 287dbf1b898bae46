"""Exact-in-time Galerkin stepping with a Taylor scaling-and-squaring exponential."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .basis import BasisParams, SpectralField, gauss_hermite_rule, hermite_function_table
from .spectral_ops import derivative_matrix


class ConfigurationError(ValueError):
    pass


class NumericalError(RuntimeError):
    pass


@dataclass(frozen=True)
class BilinearForm:
    """Symmetric bilinear form a(u, v) on the Hermite basis.

    ``integrand(hi, dhi, hj, dhj, x)`` is only used for user forms; it receives
    basis values and derivatives at quadrature points and must return the
    pointwise integrand. ``kind="heat"`` uses the exact derivative map and
    ``kind="zero"`` gives a = 0.
    """

    kind: str = "heat"
    integrand: Callable | None = None
    symmetric: bool = True
    time_dependent: bool = False

    @classmethod
    def heat(cls) -> "BilinearForm":
        return cls("heat")

    @classmethod
    def zero(cls) -> "BilinearForm":
        return cls("zero")


@dataclass(frozen=True)
class SourceTerm:
    """f(x, t); ``None`` evaluator means f = 0."""

    eval: Callable | None = None

    @property
    def is_zero(self) -> bool:
        return self.eval is None


def assemble_stiffness(form: BilinearForm, basis: BasisParams, t: float = 0.0) -> np.ndarray:
    """Matrix A_ij = a(H_i, H_j) for ``basis``."""
    n = basis.n
    if form.kind == "zero":
        return np.zeros((n + 1, n + 1))
    if form.kind == "heat":
        d = derivative_matrix(n, basis.beta)
        return basis.norm_sq * (d.T @ d)
    if form.integrand is None:
        raise ConfigurationError(f"form kind {form.kind!r} needs an integrand")
    rule = gauss_hermite_rule(2 * n + 8)
    xs = basis.x0 + rule.nodes / basis.beta
    h = hermite_function_table(n + 1, rule.nodes)
    dh = derivative_matrix(n, basis.beta).T @ h
    h = h[: n + 1]
    w = rule.function_weights / basis.beta
    a = np.empty((n + 1, n + 1), dtype=complex)
    for i in range(n + 1):
        for j in range(n + 1):
            a[i, j] = np.sum(w * form.integrand(h[i], dh[i], h[j], dh[j], xs, t))
    if np.all(np.abs(a.imag) <= 1e-14 * max(1.0, np.abs(a).max())):
        a = a.real
    if form.symmetric:
        scale = max(1.0, float(np.abs(a).max()))
        if np.abs(a - a.T).max() > 1e-12 * scale:
            raise ConfigurationError("declared-symmetric form assembled to a non-symmetric matrix")
        a = 0.5 * (a + a.T)
    return a


def expm_apply(a: np.ndarray, dt: float, v, tol: float = 1e-15, max_terms: int = 60) -> np.ndarray:
    """exp(-a dt) v by Taylor series on exp(-a dt / 3) applied three times.

    When ||a|| dt / 3 > 1 the third is halved further until the series
    argument has norm at most one. ``v`` may be a vector or a matrix of columns.
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    v = np.asarray(v)
    w = np.array(v, dtype=np.result_type(a, v, float), copy=True)
    if dt == 0.0:
        return w
    x = -a * (dt / 3.0)
    norm = np.linalg.norm(x, 1)
    halvings = 0
    while norm > 1.0:
        x = x * 0.5
        norm *= 0.5
        halvings += 1
    for _ in range(3 * 2 ** halvings):
        term = w
        acc = w.copy()
        for k in range(1, max_terms + 1):
            term = (x @ term) / k
            acc = acc + term
            if np.linalg.norm(term) < tol * np.linalg.norm(acc):
                break
        else:
            raise NumericalError(
                f"Taylor series did not converge in {max_terms} terms "
                f"(||A|| dt = {np.linalg.norm(a, 1) * dt:.3e})")
        w = acc
    return w


def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=32)
def _exponentials(form: BilinearForm, beta: float, n: int, dt: float, gl_order: int,
                  t: float) -> tuple[np.ndarray, np.ndarray]:
    basis = BasisParams(beta, 0.0, n)
    a_hat = assemble_stiffness(form, basis, t) / basis.norm_sq
    eye = np.eye(n + 1)
    nodes, _ = gauss_legendre(gl_order)
    step_matrix = expm_apply(a_hat, dt, eye)
    kernels = np.stack([expm_apply(a_hat, dt * (1.0 - s), eye) for s in nodes])
    step_matrix.setflags(write=False)
    kernels.setflags(write=False)
    return step_matrix, kernels


class Propagator:
    """Stepping data for one basis and a fixed ``dt``.

    The mass matrix is (sqrt(pi)/beta) I, so the coefficient system is
    u' = -(A / m) u + F / m with m = sqrt(pi)/beta. The exponentials only
    depend on (beta, n, dt) for the built-in forms and are shared between
    displacements.
    """

    def __init__(self, basis: BasisParams, dt: float, form: BilinearForm,
                 gl_order: int = 5, source_order: int | None = None, t: float = 0.0):
        self.basis = basis
        self.dt = dt
        self.form = form
        self.gl_order = gl_order
        if form.kind not in ("heat", "zero"):
            # user forms may depend on x0 through their integrand
            a_hat = assemble_stiffness(form, basis, t) / basis.norm_sq
            eye = np.eye(basis.size)
            nodes, _ = gauss_legendre(gl_order)
            self.step_matrix = expm_apply(a_hat, dt, eye)
            self.kernel_matrices = np.stack(
                [expm_apply(a_hat, dt * (1.0 - s), eye) for s in nodes])
        else:
            self.step_matrix, self.kernel_matrices = _exponentials(
                form, basis.beta, basis.n, dt, gl_order, 0.0)
        self.gl_nodes, self.gl_weights = gauss_legendre(gl_order)
        m = source_order or 2 * basis.n + 40
        rule = gauss_hermite_rule(m)
        self.source_points = basis.x0 + rule.nodes / basis.beta
        # f_i / (sqrt(pi)/beta) = sum_k fw_k f(x_k) H_i(xi_k) / sqrt(pi)
        table = hermite_function_table(basis.n, rule.nodes)
        self.source_matrix = table * rule.function_weights / math.sqrt(math.pi)

    def source_coeffs(self, src: SourceTerm, t: float) -> np.ndarray:
        return self.source_matrix @ np.asarray(src.eval(self.source_points, t), dtype=complex)

    def advance(self, coeffs: np.ndarray, t: float, src: SourceTerm) -> np.ndarray:
        out = self.step_matrix @ coeffs
        if not src.is_zero:
            for s, w, k in zip(self.gl_nodes, self.gl_weights, self.kernel_matrices):
                out = out + (w * self.dt) * (k @ self.source_coeffs(src, t + s * self.dt))
        return out


def step(field: SpectralField, t: float, dt: float, form: BilinearForm, src: SourceTerm,
         gl_order: int = 5, propagator: Propagator | None = None) -> SpectralField:
    """Advance ``field`` from ``t`` to ``t + dt`` on its own basis.

    Pass a ``propagator`` built for the same basis and ``dt`` to reuse the
    source projector across steps.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if propagator is None:
        propagator = Propagator(field.basis, dt, form, gl_order, t=t)
    elif propagator.basis != field.basis or propagator.dt != dt:
        raise ValueError("propagator does not match the field basis or dt")
    return SpectralField(field.basis, propagator.advance(field.coeffs, t, src))
