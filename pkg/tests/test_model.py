import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vanhove.model import (
    BlockRandomMatrix,
    Hamiltonian,
    SpectrumConfig,
    WaveVector,
    assemble_hamiltonian,
    build_h0,
    make_initial_state,
    sample_interaction,
)
from vanhove.propagator import site_probability


def test_h0_diagonal_n4():
    h0 = build_h0(SpectrumConfig(4))
    np.testing.assert_array_equal(h0.h0_diagonal[:4], [0.25, 0.5, 0.75, 1.0])
    np.testing.assert_array_equal(h0.h0_diagonal[4:], [0.25, 0.5, 0.75, 1.0])


def test_h0_diagonal_n2_layout():
    np.testing.assert_array_equal(build_h0(SpectrumConfig(2)).h0_diagonal, [0.5, 1.0, 0.5, 1.0])


def test_h0_rejects_single_level():
    with pytest.raises(ValueError):
        build_h0(SpectrumConfig(1))


@pytest.mark.parametrize("kwargs", [
    {"n_levels": 0}, {"n_levels": 4, "coupling": -0.1}, {"n_levels": 4, "edge_cutoff": 0.5},
    {"n_levels": 4, "seed": -1},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SpectrumConfig(**kwargs)


def test_interaction_deterministic():
    cfg = SpectrumConfig(16, seed=11)
    a = sample_interaction(cfg).dense()
    b = sample_interaction(cfg).dense()
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, sample_interaction(cfg, seed=12).dense())


def test_interaction_blocks():
    v = sample_interaction(SpectrumConfig(8, seed=3)).dense()
    assert np.all(v[:8, :8] == 0) and np.all(v[8:, 8:] == 0)
    assert np.array_equal(v[8:, :8], v[:8, 8:].conj().T)


def test_interaction_variance():
    # pool several draws to reach >= 1e4 entries; E|z|^2 = 1/N
    n = 64
    z = np.concatenate([
        sample_interaction(SpectrumConfig(n), seed=s).upper_block.ravel() for s in range(3)
    ])
    assert z.size >= 10_000
    sq = np.abs(z) ** 2
    se = sq.std(ddof=1) / np.sqrt(sq.size)
    assert abs(sq.mean() - 1 / n) < 5 * se


def test_block_matrix_read_only():
    v = sample_interaction(SpectrumConfig(4))
    with pytest.raises(ValueError):
        v.upper_block[0, 0] = 1.0


def test_zero_coupling_is_free():
    cfg = SpectrumConfig(6, seed=1)
    h0 = build_h0(cfg)
    ham = assemble_hamiltonian(h0, sample_interaction(cfg), 0.0)
    np.testing.assert_array_equal(ham.matrix(), np.diag(h0.h0_diagonal))


def test_single_entry_closure():
    n = 3
    block = np.zeros((n, n), dtype=complex)
    c = 0.3 - 0.7j
    block[0, 0] = c
    ham = assemble_hamiltonian(build_h0(SpectrumConfig(n)), BlockRandomMatrix(block), 1.0)
    h = ham.matrix()
    assert h[0, n] == c
    assert h[n, 0] == np.conj(c)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        assemble_hamiltonian(build_h0(SpectrumConfig(4)), sample_interaction(SpectrumConfig(5)), 0.1)


def test_sampled_spectrum_real():
    cfg = SpectrumConfig(24, seed=5)
    h = assemble_hamiltonian(build_h0(cfg), sample_interaction(cfg), 0.2).matrix()
    assert np.max(np.abs(np.linalg.eigvals(h).imag)) < 1e-10


def test_initial_band_example():
    cfg = SpectrumConfig(10)
    psi = make_initial_state(cfg, 1, (0.4, 0.6))
    nonzero = np.flatnonzero(psi.amplitudes)
    assert list(nonzero) == [4, 5]  # levels n = 5, 6 of site 1
    np.testing.assert_allclose(psi.amplitudes[nonzero], 1 / np.sqrt(2))


def test_initial_site2():
    psi = make_initial_state(SpectrumConfig(20), 2, (0.3, 0.7))
    assert site_probability(psi, 2) == pytest.approx(1.0)
    assert site_probability(psi, 1) == 0.0


@pytest.mark.parametrize("band", [(0.9999, 1.0), (0.01, 0.3), (0.6, 0.4)])
def test_initial_band_rejected(band):
    with pytest.raises(ValueError):
        make_initial_state(SpectrumConfig(50, edge_cutoff=0.05), 1, band)


def test_initial_empty_band():
    with pytest.raises(ValueError):
        make_initial_state(SpectrumConfig(4), 1, (0.3, 0.45))


def test_bad_site():
    with pytest.raises(ValueError):
        make_initial_state(SpectrumConfig(10), 3, (0.3, 0.7))


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(4, 80),
    site=st.sampled_from([1, 2]),
    lo=st.floats(0.05, 0.5),
    width=st.floats(0.1, 0.45),
)
def test_initial_state_normalized(n, site, lo, width):
    cfg = SpectrumConfig(n)
    band = (lo, min(lo + width, 0.95))
    try:
        psi = make_initial_state(cfg, site, band)
    except ValueError:
        # only legitimate when no level falls in the band
        e = cfg.energies
        assert not np.any((e > band[0]) & (e <= band[1]))
        return
    assert psi.norm_squared() == pytest.approx(1.0, abs=1e-12)
    assert site_probability(psi, site) == pytest.approx(1.0, abs=1e-12)
    e = cfg.energies[np.abs(psi.site_block(site)) > 0]
    assert np.all((e > band[0]) & (e <= band[1]))


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 40), seed=st.integers(0, 2**32), lam=st.floats(0, 2))
def test_hamiltonian_hermitian(n, seed, lam):
    cfg = SpectrumConfig(n, seed=seed)
    h = assemble_hamiltonian(build_h0(cfg), sample_interaction(cfg), lam).matrix()
    assert np.array_equal(h, h.conj().T)


def test_wavevector_shape_checked():
    with pytest.raises(ValueError):
        WaveVector(np.ones(3))
    with pytest.raises(ValueError):
        Hamiltonian(np.ones(3))
