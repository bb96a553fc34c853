"""Exact unitary evolution, site probabilities and the truncated Duhamel series."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .model import BlockRandomMatrix, Hamiltonian, WaveVector, _check_site

RECONSTRUCTION_ATOL = 1e-9
UNITARITY_ATOL = 1e-10


class QuadratureError(RuntimeError):
    """Raised when a time grid cannot be refined to the requested tolerance."""


@dataclass(frozen=True, eq=False)
class SpectralFactors:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    coupling: float = 0.0

    @property
    def dimension(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True, eq=False)
class RelaxationTrace:
    times: np.ndarray
    scaled_times: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    norm: np.ndarray

    def imbalance(self) -> np.ndarray:
        return self.p1 - self.p2

    def __len__(self):
        return self.times.size


def eigendecompose(ham: Hamiltonian, check: bool = True) -> SpectralFactors:
    """Diagonalize ``H`` densely.

    With ``check`` the reconstruction and unitarity invariants are verified,
    which costs two extra matrix products.
    """
    dense = ham.matrix()
    try:
        w, u = np.linalg.eigh(dense)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"eigensolver failed to converge: {exc}") from exc
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(u))):
        raise ArithmeticError("eigensolver returned non-finite values")
    if check:
        recon = np.max(np.abs((u * w) @ u.conj().T - dense))
        if recon >= RECONSTRUCTION_ATOL:
            raise ArithmeticError(f"reconstruction error {recon:.3e} exceeds {RECONSTRUCTION_ATOL}")
        unit = np.max(np.abs(u.conj().T @ u - np.eye(w.size)))
        if unit >= UNITARITY_ATOL:
            raise ArithmeticError(f"eigenvectors not unitary (deviation {unit:.3e})")
    return SpectralFactors(w, u, float(ham.coupling))


def _validate_times(times) -> np.ndarray:
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if t.ndim != 1:
        raise ValueError("times must be one-dimensional")
    if np.any(t < 0):
        raise ValueError("times must be nonnegative")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    return t


def evolve_amplitudes(psi0: WaveVector, factors: SpectralFactors, times) -> np.ndarray:
    """Amplitudes of ``exp(-iHt) psi0``, one column per time."""
    t = np.atleast_1d(np.asarray(times, dtype=float))
    coeffs = factors.eigenvectors.conj().T @ psi0.amplitudes
    phases = np.exp(-1j * np.outer(factors.eigenvalues, t))
    return factors.eigenvectors @ (phases * coeffs[:, None])


def propagate(psi0: WaveVector, factors: SpectralFactors, t: float) -> WaveVector:
    return WaveVector(evolve_amplitudes(psi0, factors, [t])[:, 0])


def evolve(
    psi0: WaveVector,
    factors: SpectralFactors,
    times: Sequence[float],
    coupling: Optional[float] = None,
) -> RelaxationTrace:
    """Site occupation probabilities of ``psi_t`` on a time grid.

    ``scaled_times`` are ``coupling**2 * t``; the coupling defaults to the one the
    factors were computed for.
    """
    if psi0.amplitudes.size != factors.dimension:
        raise ValueError("state and Hamiltonian dimensions differ")
    t = _validate_times(times)
    lam = factors.coupling if coupling is None else float(coupling)
    amps = evolve_amplitudes(psi0, factors, t)
    n = psi0.n_levels
    weights = np.abs(amps) ** 2
    p1 = weights[:n].sum(axis=0)
    p2 = weights[n:].sum(axis=0)
    return RelaxationTrace(t, lam**2 * t, p1, p2, p1 + p2)


def site_probability(psi: WaveVector, site: int) -> float:
    _check_site(site)
    block = psi.site_block(site)
    return float(np.vdot(block, block).real)


def _interaction_picture_series(
    order: int,
    t: float,
    energies: np.ndarray,
    vdense: np.ndarray,
    coupling: float,
    psi0: np.ndarray,
    steps: int,
) -> List[np.ndarray]:
    """Duhamel terms at time ``t`` on a uniform trapezoid grid of ``steps`` intervals."""
    s = np.linspace(0.0, t, steps + 1)
    h = t / steps
    rot = np.exp(1j * np.outer(energies, s))  # e^{i H0 s}, column per grid point
    free_t = np.exp(-1j * energies * t)
    phi = np.repeat(psi0[:, None], steps + 1, axis=1)
    terms = [free_t * psi0]
    for _ in range(order):
        integrand = rot * (vdense @ (rot.conj() * phi))
        cumulative = np.zeros_like(integrand)
        cumulative[:, 1:] = np.cumsum(0.5 * h * (integrand[:, 1:] + integrand[:, :-1]), axis=1)
        phi = -1j * coupling * cumulative
        terms.append(free_t * phi[:, -1])
    return terms


def duhamel_series(
    order: int,
    t: float,
    h0: Hamiltonian,
    v: BlockRandomMatrix,
    coupling: float,
    psi0: WaveVector,
    tol: float = 1e-6,
    min_steps: int = 64,
    max_steps: int = 2**16,
) -> List[WaveVector]:
    """All terms ``psi^(0..order)(t)`` of the Duhamel expansion.

    The trapezoid grid is doubled until every term moves by less than ``tol``
    in norm between successive grids.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    if t < 0:
        raise ValueError("t must be nonnegative")
    energies = h0.h0_diagonal
    amp0 = psi0.amplitudes
    if amp0.size != energies.size or v.dimension != energies.size:
        raise ValueError("dimension mismatch between H0, V and psi0")
    if order == 0 or t == 0.0 or coupling == 0.0:
        zero = np.zeros_like(amp0)
        first = np.exp(-1j * energies * t) * amp0
        return [WaveVector(first)] + [WaveVector(zero) for _ in range(order)]
    vdense = v.dense()
    steps = min_steps
    prev = _interaction_picture_series(order, t, energies, vdense, coupling, amp0, steps)
    while True:
        steps *= 2
        if steps > max_steps:
            raise QuadratureError(
                f"Duhamel quadrature did not reach tol={tol:g} within {max_steps} steps"
            )
        cur = _interaction_picture_series(order, t, energies, vdense, coupling, amp0, steps)
        change = max(np.linalg.norm(a - b) for a, b in zip(cur, prev))
        if change < tol:
            return [WaveVector(a) for a in cur]
        prev = cur


def duhamel_term(
    n: int,
    t: float,
    h0: Hamiltonian,
    v: BlockRandomMatrix,
    coupling: float,
    psi0: WaveVector,
    tol: float = 1e-6,
) -> WaveVector:
    """The order-``n`` Duhamel contribution ``(-i lambda)^n Gamma_n(t) psi0``."""
    return duhamel_series(n, t, h0, v, coupling, psi0, tol=tol)[n]


def remainder_norm(
    order: int,
    t: float,
    h0: Hamiltonian,
    v: BlockRandomMatrix,
    coupling: float,
    psi0: WaveVector,
    factors: Optional[SpectralFactors] = None,
    tol: float = 1e-6,
) -> float:
    """``|| psi_t(exact) - sum_{n <= order} psi^(n)(t) ||``."""
    if factors is None:
        factors = eigendecompose(Hamiltonian(h0.h0_diagonal, v, coupling))
    exact = evolve_amplitudes(psi0, factors, [t])[:, 0]
    partial = sum(term.amplitudes for term in duhamel_series(order, t, h0, v, coupling, psi0, tol=tol))
    return float(np.linalg.norm(exact - partial))
