"""Model problems with manufactured analytic solutions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .basis import SpectralField, gauss_hermite_rule, hermite_function_table, synthesize
from .integrator import BilinearForm, SourceTerm


@dataclass(frozen=True)
class ParabolicProblem:
    """u_t + A u = f weakly on the real line, u(., 0) = initial."""

    name: str
    form: BilinearForm
    source: SourceTerm
    initial: Callable
    analytic: Callable | None
    horizon: float
    dt: float
    # times at which the source may jump; the time grid must include them
    source_breaks: tuple = ()

    @property
    def n_steps(self) -> int:
        n = round(self.horizon / self.dt)
        if abs(n * self.dt - self.horizon) > 1e-9 * self.horizon:
            raise ValueError(f"horizon {self.horizon} is not a whole number of steps of {self.dt}")
        return n

    def with_time(self, horizon: float | None = None, dt: float | None = None) -> "ParabolicProblem":
        return ParabolicProblem(self.name, self.form, self.source, self.initial, self.analytic,
                                self.horizon if horizon is None else horizon,
                                self.dt if dt is None else dt, self.source_breaks)


def _ex1_solution(x, t):
    x = np.asarray(x, dtype=float)
    return np.exp(1j * (t + 1.0) * x - (x - 2.0 * t) ** 2 / (4.0 * (t + 1.0))) / math.sqrt(t + 1.0)


def _ex1_source(x, t):
    x = np.asarray(x, dtype=float)
    phase = np.exp(1j * (t + 1.0) * x - (x - 2.0 * t) ** 2 / (4.0 * (t + 1.0)))
    amp = ((x - 2.0 * t) + (t + 1.0) ** 3 + 2j * (x - t) * (1.0 + t)) / (t + 1.0) ** 1.5
    return amp * phase


def example1(dt: float = 2e-4, horizon: float = 2.0) -> ParabolicProblem:
    """Complex Gaussian wave packet drifting right, spreading and oscillating faster."""
    return ParabolicProblem(
        "example1", BilinearForm.heat(), SourceTerm(_ex1_source),
        lambda x: _ex1_solution(x, 0.0), _ex1_solution, horizon, dt)


def _ex2_shift(t, v):
    return v * t if t <= 2.0 else v * (4.0 - t)


def _ex2_solution(x, t, v=2.0):
    z = np.asarray(x, dtype=float) + _ex2_shift(t, v)
    return np.exp(-z * z) * np.sin(z)


def _ex2_source(x, t, v=2.0):
    x = np.asarray(x, dtype=float)
    if t <= 2.0:
        z = x + v * t
        return ((3.0 - 2.0 * z * (v + 2.0 * z)) * np.sin(z) + (v + 4.0 * z) * np.cos(z)) * np.exp(-z * z)
    z = x + v * (4.0 - t)
    return ((3.0 - 4.0 * z * z + 2.0 * v * z) * np.sin(z)
            + (4.0 * x + v * (15.0 - 4.0 * t)) * np.cos(z)) * np.exp(-z * z)


def example2(dt: float = 2e-4, horizon: float = 6.0, v: float = 2.0) -> ParabolicProblem:
    """Gaussian-sine pulse moving left until t = 2, then right."""
    return ParabolicProblem(
        "example2", BilinearForm.heat(),
        SourceTerm(lambda x, t: _ex2_source(x, t, v)),
        lambda x: _ex2_solution(x, 0.0, v),
        lambda x, t: _ex2_solution(x, t, v), horizon, dt, source_breaks=(2.0,))


PROBLEMS = {"example1": example1, "example2": example2}


class DegenerateNorm(ValueError):
    pass


def _error_rule(field: SpectralField, order: int | None):
    b = field.basis
    rule = gauss_hermite_rule(order or 4 * (b.n + 1))
    return b.x0 + rule.nodes / b.beta, rule.function_weights / b.beta


def l2_error(field: SpectralField, analytic: Callable, t: float,
             order: int | None = None) -> tuple[float, float]:
    """Absolute error ||u - U|| and ||u|| by Gauss-Hermite quadrature in the field's scale."""
    xs, w = _error_rule(field, order)
    u = np.asarray(analytic(xs, t), dtype=complex)
    diff = u - synthesize(field, xs)
    err = math.sqrt(float(np.dot(w, np.abs(diff) ** 2)))
    ref = math.sqrt(float(np.dot(w, np.abs(u) ** 2)))
    return err, ref


def relative_l2_error(field: SpectralField, analytic: Callable, t: float,
                      order: int | None = None) -> float:
    err, ref = l2_error(field, analytic, t, order)
    if ref < 1e-300:
        raise DegenerateNorm("analytic solution has (numerically) zero norm")
    return err / ref


def projection_residual(field: SpectralField, analytic: Callable, t: float, keep: int,
                        order: int | None = None) -> float:
    """||(I - pi_keep) u|| for the analytic solution on the field's basis."""
    b = field.basis
    xs, w = _error_rule(field, order)
    u = np.asarray(analytic(xs, t), dtype=complex)
    table = hermite_function_table(keep, b.beta * (xs - b.x0))
    coeffs = (table * w) @ u / b.norm_sq
    resid = u - coeffs @ table
    return math.sqrt(float(np.dot(w, np.abs(resid) ** 2)))
