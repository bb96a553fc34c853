"""Effective (Van Hove limit) description: band resolvent, closed form, rate equations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

DEFAULT_RATE = 4.0 * math.pi
DEFAULT_NBAR_MAX = 60
BAND_MARGIN = 1e-6


def theta_reg(alpha, eta):
    """Regularized band resolvent ``int_0^1 -dw / (w - alpha - i eta)``.

    Evaluated from the antiderivative ``-log(w - alpha - i eta)``; both logarithm
    arguments have imaginary part ``-eta`` so the principal branch is continuous.
    """
    alpha = np.asarray(alpha, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if np.any(eta <= 0):
        raise ValueError("eta must be positive")
    z = alpha + 1j * eta
    out = np.log(-z) - np.log(1.0 - z)
    return out if out.ndim else complex(out)


def theta(omega):
    """``lim_{eta -> 0+} theta_reg(omega, eta)`` for ``omega`` inside the band.

    Equals ``log(omega / (1 - omega)) - i pi``, so ``i (theta - conj(theta)) = 2 pi``.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < BAND_MARGIN) or np.any(omega > 1.0 - BAND_MARGIN):
        raise ValueError(f"omega must lie in [{BAND_MARGIN}, {1 - BAND_MARGIN}]")
    out = np.log(omega / (1.0 - omega)) - 1j * np.pi
    return out if out.ndim else complex(out)


def _check_p0(p0) -> Tuple[float, float]:
    a, b = (float(x) for x in p0)
    if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0) or abs(a + b - 1.0) > 1e-12:
        raise ValueError(f"p0 must be a probability pair summing to 1, got {p0}")
    return a, b


@dataclass(frozen=True)
class EffectiveSolution:
    p0: Tuple[float, float]
    decay_rate: float = DEFAULT_RATE

    def __post_init__(self):
        object.__setattr__(self, "p0", _check_p0(self.p0))

    def __call__(self, scaled_time):
        return closed_form(scaled_time, self.p0, self.decay_rate)

    @property
    def equilibrium(self) -> Tuple[float, float]:
        mean = 0.5 * (self.p0[0] + self.p0[1])
        return mean, mean


def closed_form(scaled_time, p0, rate: float = DEFAULT_RATE):
    """``P^x_T = (P0(x) + P0(xbar))/2 + (P0(x) - P0(xbar)) exp(-rate T)/2``.

    Accepts scalar or array ``T``; returns ``(P^1_T, P^2_T)``.
    """
    a, b = _check_p0(p0)
    T = np.asarray(scaled_time, dtype=float)
    if np.any(T < 0):
        raise ValueError("scaled time must be nonnegative")
    decay = np.exp(-rate * T)
    mean = 0.5 * (a + b)
    p1 = mean + 0.5 * (a - b) * decay
    p2 = mean + 0.5 * (b - a) * decay
    if p1.ndim == 0:
        return float(p1), float(p2)
    return p1, p2


def poisson_resum(scaled_time: float, p0, nbar_max: int = DEFAULT_NBAR_MAX) -> Tuple[float, float]:
    """Partial sum over the number of outer contractions ``nbar``.

    Term ``nbar`` carries weight ``exp(-2 pi T) (2 pi T)^nbar / nbar!`` and the
    initial population of the same site for even ``nbar``, of the other site
    for odd ``nbar``.
    """
    if nbar_max < 0:
        raise ValueError("nbar_max must be >= 0")
    a, b = (float(x) for x in p0)
    T = float(scaled_time)
    if T < 0:
        raise ValueError("scaled time must be nonnegative")
    x = 2.0 * math.pi * T
    # term recursion avoids factorial overflow
    term = math.exp(-x)
    even = odd = 0.0
    for nbar in range(nbar_max + 1):
        if nbar:
            term *= x / nbar
        if nbar % 2:
            odd += term
        else:
            even += term
    return a * even + b * odd, b * even + a * odd


def _rk4_step(p: np.ndarray, h: float, coeff: float) -> np.ndarray:
    def rhs(y):
        d = y[0] - y[1]
        return np.array([-coeff * d, coeff * d])

    k1 = rhs(p)
    k2 = rhs(p + 0.5 * h * k1)
    k3 = rhs(p + 0.5 * h * k2)
    k4 = rhs(p + h * k3)
    return p + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def rate_ode(T_grid, p0, coeff: float, max_step: float = 1e-3) -> np.ndarray:
    """RK4 solution of ``dP1/dT = -coeff (P1 - P2)``, ``dP2/dT = -coeff (P2 - P1)``.

    Returns an array of shape ``(len(T_grid), 2)``. The integration starts at
    ``T = 0`` from ``p0`` and uses sub-steps no longer than ``max_step``.
    """
    T = np.asarray(T_grid, dtype=float)
    if T.ndim != 1 or np.any(T < 0) or np.any(np.diff(T) <= 0):
        raise ValueError("T_grid must be nonnegative and strictly increasing")
    state = np.array(_check_p0(p0), dtype=float)
    out = np.empty((T.size, 2))
    current = 0.0
    for idx, target in enumerate(T):
        span = target - current
        if span > 0:
            steps = max(1, math.ceil(span / max_step))
            h = span / steps
            for _ in range(steps):
                state = _rk4_step(state, h, coeff)
        current = target
        out[idx] = state
    return out
