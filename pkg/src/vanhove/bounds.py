"""Quadrature checks of the resolvent integral inequalities.

Each ``check_*`` function returns ``LHS / RHS`` for one parameter tuple; a
ratio above one (plus quadrature slack) is a violation. Inequalities with an
unspecified constant are checked in two passes by :func:`verify_all`: the
constant is fitted on a deterministic coarse grid, frozen, and then confirmed
on an independent random sweep.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .effective import theta, theta_reg
from .propagator import QuadratureError

QUAD_ORDER = 10
QUAD_SLACK = 1e-3
QUAD_RTOL = 1e-7  # refinement stops once halving the panels moves the value less than this
MAX_HALVINGS = 8
CUTOFF = 3.0  # integration half-width C for the alpha/beta integrals
DELTA_SUB = 0.75  # exponent of the delta < 1 pair bound
PRODUCT_CONSTANT = math.pi
FIT_MARGIN = 1.25

PARAM_RANGE = (-2.0, 3.0)
ETA_RANGE = (1e-3, 0.5)
BAND_EDGE = 0.05
FOUR_K_ETAS = (0.01, 0.015, 0.025, 0.04, 0.06, 0.1, 0.19)


class InequalityId(enum.Enum):
    POWER = "power"
    PRODUCT = "product"
    ONE_MINUS_A = "one_minus_a"
    AB_LOG = "ab_log"
    AB_DELTA = "ab_delta"
    FOUR_K = "four_k"
    THETA_LIPSCHITZ = "theta_lipschitz"


@dataclass(frozen=True)
class BoundCheckReport:
    inequality_id: InequalityId
    samples: int
    max_ratio: float
    violations: int
    constant: float = 1.0
    constant_source: str = "literal"
    literal_violations: Optional[int] = None

    @property
    def passed(self) -> bool:
        return self.violations == 0 and math.isfinite(self.max_ratio)


# --------------------------------------------------------------------------
# quadrature

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(QUAD_ORDER)


def _distance(x: float, sharp: Sequence[Tuple[float, float]]) -> float:
    return min(0.0 if a <= x <= b else min(abs(x - a), abs(x - b)) for a, b in sharp)


def panel_rule(
    lo: float,
    hi: float,
    eta: float,
    sharp: Sequence[Tuple[float, float]] = (),
    scale: float = 1.0,
    grade: float = 0.5,
) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on ``[lo, hi]``.

    Panels are ``scale * max(eta, grade * d)`` wide, ``d`` being the distance to
    the nearest sharp interval (a pole location or a band). An empty ``sharp``
    means uniform panels of width ``scale * eta``.
    """
    if hi <= lo:
        return np.empty(0), np.empty(0)
    edges = [lo]
    x = lo
    while x < hi:
        d = _distance(x, sharp) if sharp else 0.0
        width = scale * max(eta, grade * d)
        x = min(hi, x + width)
        if hi - x < 1e-3 * scale * eta:
            x = hi
        edges.append(x)
    edges = np.asarray(edges)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


def refine(integral: Callable[[float], complex], scale: float = 1.0, atol: float = 0.0) -> complex:
    """Halve the panel scale until the value settles; returns the finest value.

    ``atol`` guards integrals that cancel down to (nearly) zero.
    """
    prev = integral(scale)
    for _ in range(MAX_HALVINGS):
        scale *= 0.5
        cur = integral(scale)
        if abs(cur - prev) <= max(atol, QUAD_RTOL * abs(cur)):
            return cur
        prev = cur
    raise QuadratureError(f"panel refinement did not settle after {MAX_HALVINGS} halvings")


# --------------------------------------------------------------------------
# single-point checks

def power_integral(k: int, alpha: float, eta: float, scale: float = 1.0) -> complex:
    """Quadrature of ``int_0^1 (-1 / (w - alpha - i eta))^k dw``."""
    w, wt = panel_rule(0.0, 1.0, eta, [(alpha, alpha)], scale)
    return complex(np.sum(wt * (-1.0 / (w - alpha - 1j * eta)) ** k))


def check_power_bound(k: int, alpha: float, eta: float, scale: float = 1.0) -> float:
    if k < 2:
        raise ValueError("power bound needs k >= 2")
    if eta <= 0:
        raise ValueError("eta must be positive")
    rhs = abs(1.0 / (1.0 - alpha - 1j * eta)) ** (k - 1) + abs(1.0 / (-alpha - 1j * eta)) ** (k - 1)
    # the integrand reaches eta^-k but may cancel to O(1): allow for roundoff on its mass
    floor = QUAD_RTOL * rhs + 1e-12 * math.pi * eta ** (1 - k)
    lhs = abs(refine(lambda s: power_integral(k, alpha, eta, s), scale, floor))
    return lhs / rhs


def product_integral(k: int, p: int, alpha: float, beta: float, eta: float, scale: float = 1.0) -> float:
    """Quadrature of ``int_0^1 |w - alpha - i eta|^-k |w - beta + i eta|^-p dw``."""
    w, wt = panel_rule(0.0, 1.0, eta, [(alpha, alpha), (beta, beta)], scale)
    f = np.abs(w - alpha - 1j * eta) ** (-k) * np.abs(w - beta + 1j * eta) ** (-p)
    return float(np.sum(wt * f))


def check_product_bound(
    k: int, p: int, alpha: float, beta: float, eta: float,
    constant: float = PRODUCT_CONSTANT, scale: float = 1.0,
) -> float:
    """``LHS / (constant * eta^-(k+p-1))``.

    The default constant pi is the one the Cauchy-Schwarz step actually
    delivers; ``constant=1`` tests the sharper form.
    """
    if k + p < 2:
        raise ValueError("product bound needs k + p >= 2")
    if eta <= 0:
        raise ValueError("eta must be positive")
    return refine(lambda s: product_integral(k, p, alpha, beta, eta, s), scale).real * eta ** (k + p - 1) / constant


def resolvent_power_integral(delta: float, alpha: float, eta: float, cutoff: float = CUTOFF,
                             scale: float = 1.0) -> float:
    w, wt = panel_rule(-cutoff, cutoff, eta, [(alpha, alpha)], scale)
    return float(np.sum(wt * np.abs(w - alpha - 1j * eta) ** (-delta)))


def check_one_minus_a(delta: float, alpha: float, eta: float, constant: float = 1.0,
                      scale: float = 1.0) -> float:
    """``int_{-C}^{C} |w - alpha - i eta|^-delta dw / (constant * eta^(1 - delta))``, delta > 1."""
    if delta <= 1:
        raise ValueError("delta must exceed 1")
    return refine(lambda s: resolvent_power_integral(delta, alpha, eta, scale=s), scale).real * eta ** (delta - 1) / constant


def pair_integral(x: float, y: float, eta: float, power: float = 1.0, cutoff: float = CUTOFF,
                  scale: float = 1.0) -> float:
    """``int_{-C}^{C} |x - a - i eta|^-power |y - a - i eta|^-power da``."""
    a, wt = panel_rule(-cutoff, cutoff, eta, [(x, x), (y, y)], scale)
    f = (np.abs(x - a - 1j * eta) * np.abs(y - a - 1j * eta)) ** (-power)
    return float(np.sum(wt * f))


def check_log_bounds(x: float, y: float, eta: float, c_log: float = 1.0, c_delta: float = 1.0,
                     scale: float = 1.0) -> Tuple[float, float]:
    """Ratios for the logarithmic pair bound and its ``delta = 0.75`` variant."""
    if not 0 < eta < 0.5:
        raise ValueError("eta must lie in (0, 0.5)")
    if max(abs(x), abs(y)) > CUTOFF:
        raise ValueError(f"|x|, |y| must not exceed C={CUTOFF}")
    gap = abs(x - y - 1j * eta)
    log_lhs = refine(lambda s: pair_integral(x, y, eta, 1.0, scale=s), scale).real
    delta_lhs = refine(lambda s: pair_integral(x, y, eta, DELTA_SUB, scale=s), scale).real
    log_ratio = log_lhs * gap / (abs(math.log(eta)) * c_log)
    delta_ratio = delta_lhs * gap**DELTA_SUB / c_delta
    return log_ratio, delta_ratio


@lru_cache(maxsize=32)
def _four_k_kernel(eta: float, scale: float = 1.0) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Alpha nodes, weights and ``G(a) = int db [int_0^1 dw |w-a-i eta|^-1 |w-b+i eta|^-1]^2``.

    The two band integrals are identical, so the four-fold integral reduces to
    a matrix product for the inner band integral and a squared sum over beta.
    """
    w, ww = panel_rule(0.0, 1.0, eta, (), scale)
    b, bw = panel_rule(-CUTOFF, CUTOFF, eta, [(0.0, 1.0)], scale)
    a, aw = panel_rule(-CUTOFF, CUTOFF, eta, (), scale)
    right = ww[:, None] / np.abs(w[:, None] - b[None, :] + 1j * eta)
    g = np.empty_like(a)
    chunk = 512
    for start in range(0, a.size, chunk):
        sl = slice(start, start + chunk)
        left = 1.0 / np.abs(w[None, :] - a[sl, None] - 1j * eta)
        inner = left @ right
        g[sl] = (inner**2) @ bw
    return a, aw, g


def four_propagator_integral(x: float, k: int, eta: float, scale: float = 1.0) -> float:
    a, aw, g = _four_k_kernel(float(eta), float(scale))
    return float(np.sum(aw * g * np.abs(x - a - 1j * eta) ** (-k)))


def check_four_propagator(x: float, k: int, eta: float, constant: float = 1.0,
                          scale: float = 1.0) -> float:
    """``LHS / (constant |log eta|^2 eta^-k)`` for the four-propagator integral."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0 < eta < 0.2:
        raise ValueError("eta must lie in (0, 0.2)")
    lhs = four_propagator_integral(x, k, eta, scale)
    return lhs * eta**k / (constant * math.log(eta) ** 2)


def check_theta_lipschitz(alpha: float, omega: float, eta: float) -> float:
    """``|Theta(alpha, eta) - Theta(omega)|`` over its linear bound, pointwise."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    lhs = abs(theta_reg(alpha, eta) - theta(omega))
    rhs = abs(omega - alpha - 1j * eta) * (
        1.0 / abs(1.0 - alpha - 1j * eta)
        + 1.0 / abs(1.0 - omega)
        + 1.0 / abs(alpha + 1j * eta)
        + 1.0 / abs(omega)
    )
    if rhs == 0.0:
        return 0.0 if lhs == 0.0 else math.inf
    return lhs / rhs


# --------------------------------------------------------------------------
# sweeps

def _log_uniform(rng: np.random.Generator, lo: float, hi: float, size: int) -> np.ndarray:
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size))


def _summarize(ident, ratios, constant=1.0, source="literal", literal=None) -> BoundCheckReport:
    ratios = np.asarray(ratios, dtype=float)
    violations = int(np.sum(~(ratios <= 1.0 + QUAD_SLACK)))
    return BoundCheckReport(ident, ratios.size, float(np.max(ratios)), violations,
                            constant, source, literal)


def _fit_constant(raw: Iterable[float]) -> float:
    return FIT_MARGIN * float(np.max(list(raw)))


def coarse_grid() -> Dict[InequalityId, List[tuple]]:
    """Deterministic parameter grids used to fit the unspecified constants."""
    xs = np.linspace(*PARAM_RANGE, 11)
    etas_ab = np.geomspace(ETA_RANGE[0], 0.45, 6)
    grid = {
        InequalityId.ONE_MINUS_A: [
            (d, a, e) for d in (1.25, 1.5, 2.0, 3.0) for a in xs for e in np.geomspace(*ETA_RANGE, 5)
        ],
        InequalityId.AB_LOG: [(x, y, e) for x in xs for y in xs for e in etas_ab],
        InequalityId.FOUR_K: [
            (x, k, e) for x in xs for k in (1, 2, 3) for e in FOUR_K_ETAS
        ],
    }
    grid[InequalityId.AB_DELTA] = grid[InequalityId.AB_LOG]
    return grid


def fit_constants() -> Dict[InequalityId, float]:
    grid = coarse_grid()
    out = {
        InequalityId.ONE_MINUS_A: _fit_constant(check_one_minus_a(*g) for g in grid[InequalityId.ONE_MINUS_A]),
        InequalityId.FOUR_K: _fit_constant(check_four_propagator(*g) for g in grid[InequalityId.FOUR_K]),
    }
    pairs = [check_log_bounds(*g) for g in grid[InequalityId.AB_LOG]]
    out[InequalityId.AB_LOG] = _fit_constant(r[0] for r in pairs)
    out[InequalityId.AB_DELTA] = _fit_constant(r[1] for r in pairs)
    return out


def verify_all(
    samples: int = 1000,
    seed: int = 0,
    constants: Optional[Dict[InequalityId, float]] = None,
) -> List[BoundCheckReport]:
    """Randomized sweeps of every inequality with frozen constants."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if constants is None:
        constants = fit_constants()
    rng = np.random.default_rng(seed)
    lo, hi = PARAM_RANGE
    reports = []

    ks = rng.integers(2, 6, samples)
    alphas = rng.uniform(lo, hi, samples)
    etas = _log_uniform(rng, *ETA_RANGE, samples)
    reports.append(_summarize(
        InequalityId.POWER,
        [check_power_bound(int(k), a, e) for k, a, e in zip(ks, alphas, etas)],
    ))

    ks = rng.integers(1, 4, samples)
    ps = rng.integers(1, 4, samples)
    alphas = rng.uniform(lo, hi, samples)
    betas = rng.uniform(lo, hi, samples)
    etas = _log_uniform(rng, *ETA_RANGE, samples)
    raw = [check_product_bound(int(k), int(p), a, b, e, constant=1.0)
           for k, p, a, b, e in zip(ks, ps, alphas, betas, etas)]
    literal = int(np.sum(np.asarray(raw) > 1.0 + QUAD_SLACK))
    reports.append(_summarize(
        InequalityId.PRODUCT, np.asarray(raw) / PRODUCT_CONSTANT,
        PRODUCT_CONSTANT, "Cauchy-Schwarz", literal,
    ))

    c = constants[InequalityId.ONE_MINUS_A]
    deltas = rng.uniform(1.25, 3.0, samples)
    alphas = rng.uniform(lo, hi, samples)
    etas = _log_uniform(rng, *ETA_RANGE, samples)
    reports.append(_summarize(
        InequalityId.ONE_MINUS_A,
        [check_one_minus_a(d, a, e, c) for d, a, e in zip(deltas, alphas, etas)],
        c, "fitted",
    ))

    c_log = constants[InequalityId.AB_LOG]
    c_delta = constants[InequalityId.AB_DELTA]
    xs = rng.uniform(lo, hi, samples)
    ys = rng.uniform(lo, hi, samples)
    etas = _log_uniform(rng, ETA_RANGE[0], 0.45, samples)
    pairs = np.array([check_log_bounds(x, y, e, c_log, c_delta) for x, y, e in zip(xs, ys, etas)])
    reports.append(_summarize(InequalityId.AB_LOG, pairs[:, 0], c_log, "fitted"))
    reports.append(_summarize(InequalityId.AB_DELTA, pairs[:, 1], c_delta, "fitted"))

    c4 = constants[InequalityId.FOUR_K]
    xs = rng.uniform(lo, hi, samples)
    ks = rng.integers(1, 4, samples)
    etas = rng.choice(FOUR_K_ETAS, samples)
    reports.append(_summarize(
        InequalityId.FOUR_K,
        [check_four_propagator(x, int(k), e, c4) for x, k, e in zip(xs, ks, etas)],
        c4, "fitted",
    ))

    alphas = rng.uniform(lo, hi, samples)
    omegas = rng.uniform(BAND_EDGE, 1.0 - BAND_EDGE, samples)
    etas = _log_uniform(rng, *ETA_RANGE, samples)
    reports.append(_summarize(
        InequalityId.THETA_LIPSCHITZ,
        [check_theta_lipschitz(a, w, e) for a, w, e in zip(alphas, omegas, etas)],
    ))
    return reports
