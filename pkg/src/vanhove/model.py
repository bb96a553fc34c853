"""Two-site model: equidistant spectrum, block random hopping, initial states.

Basis ordering is site-major: index ``(x - 1) * N + (n - 1)`` for the state
``|x, E_n>`` with ``x in {1, 2}`` and ``n = 1..N``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

HERMITIAN_ATOL = 1e-12
NORM_ATOL = 1e-12


@dataclass(frozen=True)
class SpectrumConfig:
    n_levels: int
    coupling: float = 0.0
    edge_cutoff: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if int(self.n_levels) != self.n_levels or self.n_levels < 1:
            raise ValueError(f"n_levels must be a positive integer, got {self.n_levels!r}")
        if self.coupling < 0:
            raise ValueError(f"coupling must be >= 0, got {self.coupling}")
        if not 0.0 <= self.edge_cutoff < 0.5:
            raise ValueError(f"edge_cutoff must lie in [0, 0.5), got {self.edge_cutoff}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def energies(self) -> np.ndarray:
        """Level energies ``E_n = n / N`` for one site."""
        n = self.n_levels
        return np.arange(1, n + 1, dtype=float) / n

    @property
    def dimension(self) -> int:
        return 2 * self.n_levels


@dataclass(frozen=True, eq=False)
class BlockRandomMatrix:
    """Hermitian hopping matrix with zero on-site blocks.

    Only the site-1 -> site-2 block ``upper_block`` is stored; the site-2 -> site-1
    block is its conjugate transpose.
    """

    upper_block: np.ndarray

    def __post_init__(self):
        block = np.asarray(self.upper_block, dtype=complex)
        if block.ndim != 2 or block.shape[0] != block.shape[1]:
            raise ValueError(f"upper_block must be square, got shape {block.shape}")
        block.setflags(write=False)
        object.__setattr__(self, "upper_block", block)

    @property
    def n_levels(self) -> int:
        return self.upper_block.shape[0]

    @property
    def dimension(self) -> int:
        return 2 * self.n_levels

    def dense(self) -> np.ndarray:
        n = self.n_levels
        out = np.zeros((2 * n, 2 * n), dtype=complex)
        out[:n, n:] = self.upper_block
        out[n:, :n] = self.upper_block.conj().T
        return out


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    h0_diagonal: np.ndarray
    interaction: Optional[BlockRandomMatrix] = None
    coupling: float = 0.0

    def __post_init__(self):
        diag = np.asarray(self.h0_diagonal, dtype=float)
        if diag.ndim != 1 or diag.size % 2:
            raise ValueError("h0_diagonal must be a 1-D vector of even length 2N")
        if self.interaction is not None and self.interaction.dimension != diag.size:
            raise ValueError(
                f"interaction dimension {self.interaction.dimension} does not match "
                f"H0 dimension {diag.size}"
            )
        diag.setflags(write=False)
        object.__setattr__(self, "h0_diagonal", diag)

    @property
    def dimension(self) -> int:
        return self.h0_diagonal.size

    @property
    def n_levels(self) -> int:
        return self.dimension // 2

    def matrix(self) -> np.ndarray:
        """Dense ``H0 + coupling * V``."""
        out = np.diag(self.h0_diagonal).astype(complex)
        if self.interaction is not None and self.coupling != 0.0:
            out += self.coupling * self.interaction.dense()
        return out

    def free(self) -> "Hamiltonian":
        return Hamiltonian(self.h0_diagonal)


@dataclass(frozen=True, eq=False)
class WaveVector:
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.ndim != 1 or amp.size % 2:
            raise ValueError("amplitudes must be a 1-D vector of even length 2N")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def n_levels(self) -> int:
        return self.amplitudes.size // 2

    def site_block(self, site: int) -> np.ndarray:
        _check_site(site)
        n = self.n_levels
        return self.amplitudes[(site - 1) * n : site * n]

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


def _check_site(site: int) -> None:
    if site not in (1, 2):
        raise ValueError(f"site must be 1 or 2, got {site!r}")


def build_h0(config: SpectrumConfig) -> Hamiltonian:
    """Unperturbed Hamiltonian: each site carries the levels ``n / N``."""
    if config.n_levels < 2:
        raise ValueError(f"build_h0 needs N >= 2, got N={config.n_levels}")
    energies = config.energies
    return Hamiltonian(np.concatenate([energies, energies]))


def sample_interaction(config: SpectrumConfig, seed: Optional[int] = None) -> BlockRandomMatrix:
    """Draw the inter-site block with i.i.d. complex Gaussian entries, ``E|z|^2 = 1/N``.

    Each entry is ``(a + i b) / sqrt(2N)`` with ``a, b`` standard normal.
    """
    seed = config.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    n = config.n_levels
    re = rng.standard_normal((n, n))
    im = rng.standard_normal((n, n))
    return BlockRandomMatrix((re + 1j * im) / np.sqrt(2 * n))


def assemble_hamiltonian(h0: Hamiltonian, v: BlockRandomMatrix, coupling: float) -> Hamiltonian:
    if v.dimension != h0.dimension:
        raise ValueError(f"dimension mismatch: H0 is {h0.dimension}, V is {v.dimension}")
    ham = Hamiltonian(h0.h0_diagonal, v, float(coupling))
    dense = ham.matrix()
    err = np.max(np.abs(dense - dense.conj().T))
    if err >= HERMITIAN_ATOL:
        raise ArithmeticError(f"assembled Hamiltonian is not Hermitian (max deviation {err:.3e})")
    return ham


def make_initial_state(
    config: SpectrumConfig, site: int, band: Tuple[float, float]
) -> WaveVector:
    """Uniform superposition of the levels of ``site`` with ``lo < E_n <= hi``.

    Levels with ``E_n <= eps`` or ``E_n >= 1 - eps`` never receive weight.
    """
    _check_site(site)
    lo, hi = band
    eps = config.edge_cutoff
    if not (eps <= lo < hi <= 1.0 - eps):
        raise ValueError(
            f"band {band} must satisfy {eps} <= lo < hi <= {1.0 - eps} (edge cutoff)"
        )
    energies = config.energies
    inside = (energies > lo) & (energies <= hi) & (energies > eps) & (energies < 1.0 - eps)
    count = int(inside.sum())
    if count == 0:
        raise ValueError(f"no level of the N={config.n_levels} spectrum lies inside {band}")
    n = config.n_levels
    amp = np.zeros(2 * n, dtype=complex)
    amp[(site - 1) * n : site * n][inside] = 1.0 / np.sqrt(count)
    return WaveVector(amp)
