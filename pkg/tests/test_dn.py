import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dnmaps.boundary import BoundaryFunction, BoundaryOperator, band_projector, shift_matrix, osc_norm
from dnmaps.dn import (comparison_window, defect_distance, defect_gain, defect_operator,
                       dn_distance, dn_matrix, estimate_genus, fourier_probes,
                       gauge_transform_dn, hilbert_transform, rank_window, singular_profile)
from dnmaps.errors import IndeterminateRank, InvalidInput
from dnmaps.mesh import make_flat_disk, schottky_double

from conftest import fourier_mode


@pytest.fixture(scope="module")
def dn128(disk128):
    return dn_matrix(disk128)


def _rayleigh(D, f):
    return (f @ (D.mass * (D.matrix @ f))) / (f @ (D.mass * f))


def test_disk_symbol_is_abs_k(dn128):
    for k in range(1, 9):
        for phase in (0.0, np.pi / 2):
            lam = _rayleigh(dn128, fourier_mode(128, k, phase))
            assert lam == pytest.approx(k, rel=1e-2)


def test_larger_disk_scales_symbol():
    D = dn_matrix(make_flat_disk(64, radius=2.0))
    lam = _rayleigh(D, fourier_mode(64, 3))
    assert lam == pytest.approx(1.5, rel=1e-2)


def test_dn_is_self_adjoint_and_kills_constants(dn128):
    assert dn128.symmetry_defect() < 1e-12
    assert dn128.constant_defect() < 1e-12
    ev = np.linalg.eigvals(dn128.matrix).real
    assert ev.min() > -1e-10


def test_dn_rejects_closed_meshes(disk64):
    double, _ = schottky_double(disk64)
    with pytest.raises(InvalidInput):
        dn_matrix(double)


def test_hilbert_transform_rotates_modes_on_the_disk(dn128):
    H = hilbert_transform(dn128)
    c, s = fourier_mode(128, 4), fourier_mode(128, 4, -np.pi / 2)
    assert np.abs(H.matrix @ c - s).max() < 1e-2
    assert np.abs(H.matrix @ s + c).max() < 1e-2


def test_defect_small_on_the_disk(dn128):
    D = defect_operator(hilbert_transform(dn128))
    assert defect_gain(D, 128 // 8) < 3e-2
    # mean and Nyquist are projected out
    assert np.abs(D.matrix @ np.ones(128)).max() < 1e-12
    assert np.abs(D.matrix @ (-1.0) ** np.arange(128)).max() < 1e-12


def _synthetic_defect(values, n=64, noise=1e-6, seed=0):
    """Defect operator with prescribed singular values on low modes."""
    rng = np.random.default_rng(seed)
    F = fourier_probes(n, len(values)) * np.sqrt(2.0 / n)
    U = F[:, : len(values)]
    V = F[:, len(values): 2 * len(values)]
    M = U @ np.diag(values) @ V.T
    M += noise * band_projector(n) @ rng.normal(size=(n, n)) @ band_projector(n) / n
    return BoundaryOperator(M, 1.0)


def test_estimate_genus_on_synthetic_profiles():
    assert estimate_genus(_synthetic_defect([0.5, 0.4]), 10, 8) == 1
    assert estimate_genus(_synthetic_defect([0.5, 0.4, 0.2, 0.1]), 10, 8) == 2
    assert estimate_genus(_synthetic_defect([1e-5]), 10, 8) == 0


def test_estimate_genus_rejects_odd_rank_and_missing_gap():
    with pytest.raises(IndeterminateRank):
        estimate_genus(_synthetic_defect([0.5]), 10, 8)
    # a profile decaying by a factor 2 per value has no clear gap
    Q = fourier_probes(64, 8) * np.sqrt(2.0 / 64)
    smooth = BoundaryOperator(Q @ np.diag(0.5 ** np.arange(1, 17)) @ Q.T, 1.0)
    with pytest.raises(IndeterminateRank):
        estimate_genus(smooth, 10, 8)
    with pytest.raises(InvalidInput):
        estimate_genus(_synthetic_defect([0.5, 0.4]), 1.0, 8)


def test_genus_of_disk_and_torus(dn128, torus):
    assert estimate_genus(defect_operator(hilbert_transform(dn128))) == 0
    assert estimate_genus(defect_operator(hilbert_transform(dn_matrix(torus)))) == 1


def test_windows():
    assert comparison_window(256) == 64
    assert rank_window(256) == 16 and rank_window(32) == 4


def test_singular_profile_is_sorted(dn128):
    s = singular_profile(defect_operator(hilbert_transform(dn128)), 10)
    assert np.all(np.diff(s) <= 0)


def test_dn_distance_basics(dn128, disk64):
    assert dn_distance(dn128, dn128) == 0.0
    A = dn128.operator
    B = BoundaryOperator(A.matrix + np.eye(128) * 1e-3, A.length)
    assert dn_distance(A, B) == pytest.approx(dn_distance(B, A))
    with pytest.raises(InvalidInput):
        dn_distance(dn128, dn_matrix(disk64))


def test_defect_distance_of_rank_one_perturbation():
    n = 64
    s = fourier_mode(n, 3)
    A = BoundaryOperator(np.zeros((n, n)), 1.0)
    B = BoundaryOperator(0.1 * (2.0 / n) * np.outer(s, s), 1.0)
    # (B - A) s = 0.1 s, whose oscillation is 0.2
    assert defect_distance(B, A, 8) == pytest.approx(0.2, rel=1e-12)
    assert defect_distance(B, A, 2) == pytest.approx(0.0, abs=1e-14)


# -- conformal gauge --------------------------------------------------------

def test_gauge_identity(dn128):
    n, L = dn128.n, dn128.length
    G = gauge_transform_dn(dn128, BoundaryFunction(np.ones(n), L), L * np.arange(n) / n)
    assert np.abs(G.matrix - dn128.matrix).max() < 1e-10 * np.abs(dn128.matrix).max()


@given(st.floats(0.0, 1.0), st.integers(0, 2 ** 31))
def test_gauge_rotation_conjugates_hilbert_transform(frac, seed):
    D = dn_matrix(make_flat_disk(32))
    n, L = D.n, D.length
    s = frac * L
    t = L * np.arange(n) / n
    G = gauge_transform_dn(D, BoundaryFunction(np.ones(n), L), t + s)
    rng = np.random.default_rng(seed)
    f = sum(rng.normal() * np.cos(2 * np.pi * k * t / L + rng.uniform(0, 6)) for k in range(1, 10))
    R = shift_matrix(n, -s * n / L)
    Ri = shift_matrix(n, s * n / L)
    lhs = hilbert_transform(G).matrix @ f
    rhs = Ri @ (hilbert_transform(D).matrix @ (R @ f))
    assert osc_norm(lhs - rhs) <= 1e-10 * osc_norm(f)


def test_gauge_moebius_self_map_of_the_disk():
    # a disk automorphism phi gives L(u o phi) = |phi'| (L u) o phi,
    # so transporting L along phi with factor 1/|phi'| returns L
    errs = []
    for n in (128, 256):
        D = dn_matrix(make_flat_disk(n))
        L = D.length
        w = np.exp(2j * np.pi * np.arange(n) / n)
        a = 0.2
        beta = np.unwrap(np.angle((w - a) / (1 - a * w))) * L / (2 * np.pi)
        dphi = (1 - a * a) / np.abs(1 - a * w) ** 2
        G = gauge_transform_dn(D, BoundaryFunction(1 / dphi, L), beta)
        errs.append(dn_distance(G, D, 16))
    assert errs[1] < 0.4 * errs[0]
    assert errs[1] < 5e-3


def test_gauge_transform_keeps_constants_in_the_kernel(dn128):
    n, L = dn128.n, dn128.length
    t = L * np.arange(n) / n
    beta = t + 0.3 * np.sin(2 * np.pi * t / L) * L / (2 * np.pi)
    G = gauge_transform_dn(dn128, BoundaryFunction(np.ones(n), L), beta)
    assert np.abs(G.matrix.sum(axis=1)).max() < 1e-9 * np.abs(G.matrix).max()


def test_gauge_rejects_non_monotone_reparametrisation(dn128):
    n, L = dn128.n, dn128.length
    t = L * np.arange(n) / n
    with pytest.raises(InvalidInput):
        gauge_transform_dn(dn128, BoundaryFunction(np.ones(n), L), t[::-1].copy())
    with pytest.raises(InvalidInput):
        gauge_transform_dn(dn128, BoundaryFunction(-np.ones(n), L), t)


def test_self_convergence_within_comparison_window(disk256):
    from dnmaps.boundary import resample_operator
    fine = resample_operator(dn_matrix(make_flat_disk(512)).operator, 256)
    assert dn_distance(dn_matrix(disk256), fine, comparison_window(256)) <= 5e-2


@pytest.fixture(scope="module")
def handle_defects(disk256):
    from dnmaps.mesh import attach_handle, nearest_vertex
    base = defect_operator(hilbert_transform(dn_matrix(disk256)))
    out = {}
    for eps in (0.1, 0.05):
        m = attach_handle(disk256, nearest_vertex(disk256, (-0.45, 0)),
                          nearest_vertex(disk256, (0.45, 0)), eps, 0.5)
        D = defect_operator(hilbert_transform(dn_matrix(m)))
        out[eps] = (defect_distance(D, base, 16), singular_profile(D, 16)[0])
    return out


def test_defect_distance_to_handle_tracks_its_singular_value(handle_defects):
    # unit-amplitude probes: a defect dominated by one singular pair s1 moves
    # a mode by about s1 in amplitude, i.e. about 2 s1 in oscillation
    for dist, s1 in handle_defects.values():
        assert s1 < dist <= 2.2 * s1
    assert handle_defects[0.05][0] < handle_defects[0.1][0]


@pytest.mark.xfail(strict=True, reason="oscillation of a unit mode is twice its amplitude, "
                                       "so the distance sits near 2 s1, not below s1")
def test_defect_distance_below_dominant_singular_value(handle_defects):
    dist, s1 = handle_defects[0.05]
    assert dist < s1
