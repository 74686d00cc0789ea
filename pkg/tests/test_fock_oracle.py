import math

import numpy as np
import pytest
from scipy import linalg

from qillum import ChannelParams, SceneGeometry, coherent_hypothesis_state, gaussian_qs, qi_hypothesis_state
from qillum.fock_oracle import (
    CutoffError,
    FockOperator,
    QsOracle,
    annihilation,
    beamsplitter_fock,
    coherent_hypothesis_fock,
    cutoff_for,
    helstrom_fock,
    pad_mode,
    partial_trace,
    qi_hypothesis_fock,
    qs_fock,
    quadrature_moments,
    tensor,
    thermal_fock,
    tmsv_fock,
)

INSTANCES = [
    (0.05, 0.02, 0.2, 0.5),
    (0.1, 0.05, 0.5, 0.25),
    (0.01, 0.01, 0.05, 1.0),
    (0.1, 0.03, 0.0, 0.5),
]


@pytest.fixture(scope="module")
def built():
    out = {}
    for kappa, n_s, n_b, frac in INSTANCES:
        ch, geom = ChannelParams(kappa, n_s, n_b), SceneGeometry.from_rayleigh(frac)
        out[(kappa, n_s, n_b, frac)] = dict(
            ch=ch,
            geom=geom,
            qi=[qi_hypothesis_fock(ch, geom, h) for h in (1, 2)],
            coherent=[coherent_hypothesis_fock(ch, geom, h) for h in (1, 2)],
        )
    return out


def ket(dims, *levels):
    v = np.zeros(int(np.prod(dims)), dtype=complex)
    v[np.ravel_multi_index(levels, dims)] = 1.0
    return FockOperator(dims, v, pure=True)


def number_mean(op, mode):
    rho = op.density()
    red = partial_trace(rho, [mode]).matrix
    return float(np.real(np.trace(red @ np.diag(np.arange(red.shape[0])))))


def test_tmsv():
    vac = tmsv_fock(0.0, 3)
    assert vac.matrix[0] == 1.0 and np.count_nonzero(vac.matrix) == 1
    pair = tmsv_fock(0.01, 6)
    assert pair.matrix.reshape(6, 6)[1, 1].real == pytest.approx(0.09900990099009901, abs=1e-14)
    assert pair.trace() == pytest.approx(1.0, abs=1e-8) and pair.trace() <= 1.0
    for mode in (0, 1):
        assert number_mean(pair, mode) == pytest.approx(0.01, abs=1e-8)
    with pytest.raises(CutoffError):
        tmsv_fock(0.5, 3)


def test_thermal():
    assert np.array_equal(np.real(np.diag(thermal_fock(0.0, 4).matrix)), [1, 0, 0, 0])
    th = thermal_fock(0.1, cutoff_for(0.1))
    assert th.matrix[0, 0].real == pytest.approx(1 / 1.1, abs=1e-14)
    assert number_mean(th, 0) == pytest.approx(0.1, abs=1e-8)
    with pytest.raises(CutoffError):
        thermal_fock(1.0, 5)


def test_cutoff_rule():
    for mean in (0.01, 0.2, 0.5):
        c = cutoff_for(mean)
        assert (mean / (mean + 1)) ** (c - 2) < 1e-8
    assert cutoff_for(0.0) == 3


def test_beamsplitter_cases():
    dims = (3, 3)
    one_zero = ket(dims, 1, 0)
    assert np.allclose(beamsplitter_fock(one_zero, 0, 1, 1.0).matrix, one_zero.matrix)
    swapped = beamsplitter_fock(one_zero, 0, 1, 0.0).matrix
    assert np.allclose(np.abs(swapped), np.abs(ket(dims, 0, 1).matrix))
    half = beamsplitter_fock(one_zero, 0, 1, 0.5).matrix.reshape(dims)
    assert abs(half[1, 0]) ** 2 == pytest.approx(0.5)
    assert abs(half[0, 1]) ** 2 == pytest.approx(0.5)
    with pytest.raises(ValueError):
        beamsplitter_fock(one_zero, 0, 1, 1.5)


def test_beamsplitter_hong_ou_mandel():
    out = beamsplitter_fock(ket((3, 3), 1, 1), 0, 1, 0.5).matrix.reshape(3, 3)
    assert abs(out[1, 1]) < 1e-14
    assert abs(out[2, 0]) ** 2 == pytest.approx(0.5)


def test_beamsplitter_on_density_preserves_trace():
    rho = tensor(thermal_fock(0.2, cutoff_for(0.2)), thermal_fock(0.05, cutoff_for(0.2)))
    out = beamsplitter_fock(rho, 0, 1, 0.3)
    assert out.trace() == pytest.approx(rho.trace(), abs=1e-8)
    assert number_mean(out, 0) == pytest.approx(0.3 * 0.2 + 0.7 * 0.05, abs=1e-7)


def test_partial_trace_and_padding():
    pair = tmsv_fock(0.02, 7)
    red = partial_trace(pair, [1]).matrix
    expected = thermal_fock(0.02, 7).matrix
    assert np.allclose(red, expected, atol=1e-8)
    padded = pad_mode(pair, 0, 9)
    assert padded.dims == (9, 7) and padded.trace() == pytest.approx(pair.trace())
    with pytest.raises(ValueError):
        pad_mode(pair, 0, 3)


def check_density(op):
    m = op.matrix
    assert np.max(np.abs(m - m.conj().T)) <= 1e-10
    # PSD to -1e-10: shifted matrix must admit a Cholesky factor
    linalg.cholesky(m + 1e-10 * np.eye(len(m)), lower=True)
    assert 1 - 1e-8 <= np.trace(m).real <= 1 + 1e-12


def test_constructed_states_are_densities(built):
    for entry in built.values():
        for op in entry["qi"] + entry["coherent"]:
            check_density(op)


def test_moments_match_gaussian(built):
    for entry in built.values():
        ch, geom = entry["ch"], entry["geom"]
        for h in (1, 2):
            for key, build in (("qi", qi_hypothesis_state), ("coherent", coherent_hypothesis_state)):
                mean, cov = quadrature_moments(entry[key][h - 1])
                g = build(ch, geom, h)
                assert np.max(np.abs(cov - g.cov)) <= 1e-6
                assert np.max(np.abs(mean - g.mean)) <= 1e-6


def test_kappa_zero_product():
    ch = ChannelParams(0.0, 0.02, 0.2)
    geom = SceneGeometry.from_rayleigh(0.5)
    rho = qi_hypothesis_fock(ch, geom, 2)
    d = rho.dims
    idler = partial_trace(tmsv_fock(0.02, d[2]), [1])
    expected = tensor(thermal_fock(0.2, d[0]), thermal_fock(0.2, d[1]), idler).matrix
    assert np.max(np.abs(rho.matrix - expected)) <= 1e-10


def test_coherent_zero_amplitude_is_thermal():
    ch = ChannelParams(1e-12, 1e-12, 0.1)
    rho = coherent_hypothesis_fock(ch, SceneGeometry.from_rayleigh(0.5), 2)
    d = rho.dims
    expected = tensor(thermal_fock(0.1, d[0]), thermal_fock(0.1, d[1])).matrix
    assert np.max(np.abs(rho.matrix - expected)) <= 1e-8


def trace_distance(r0, r1):
    return 0.5 * np.sum(np.abs(linalg.eigvalsh(r1.matrix - r0.matrix)))


def test_h2_approaches_h1():
    ch = ChannelParams(0.05, 0.02, 0.2)
    h1 = qi_hypothesis_fock(ch, SceneGeometry.from_rayleigh(0.5), 1)
    dists = [trace_distance(h1, qi_hypothesis_fock(ch, SceneGeometry.from_rayleigh(f), 2)) for f in (0.3, 0.03, 3e-3, 3e-5)]
    assert np.all(np.diff(dists) < 0)
    assert dists[-1] <= 1e-8


def test_qs_trivial_cases():
    rho = qi_hypothesis_fock(ChannelParams(0.05, 0.02, 0.2), SceneGeometry.from_rayleigh(0.5), 1)
    for s in (0.2, 0.5, 0.8):
        assert qs_fock(rho, rho, s) == pytest.approx(1.0, abs=1e-10)
    assert helstrom_fock(rho, rho) == pytest.approx(0.5, abs=1e-12)
    e0, e1 = ket((2, 2), 0, 1), ket((2, 2), 1, 0)
    assert qs_fock(e0, e1, 0.5) == pytest.approx(0.0, abs=1e-14)
    assert helstrom_fock(e0, e1) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(ValueError):
        qs_fock(rho, rho, 1.0)
    with pytest.raises(ValueError):
        qs_fock(e0, ket((3, 2), 0, 0), 0.5)
    skew = FockOperator((2,), np.array([[0.5, 0.3], [0.0, 0.5]], dtype=complex))
    with pytest.raises(ValueError):
        helstrom_fock(skew, skew)


def test_qs_pure_states_overlap():
    e0 = FockOperator((3,), np.array([1, 1, 0], dtype=complex) / math.sqrt(2), pure=True)
    e1 = FockOperator((3,), np.array([1, 0, 1], dtype=complex) / math.sqrt(2), pure=True)
    assert qs_fock(e0, e1, 0.3) == pytest.approx(0.25, abs=1e-12)
    # pure-state Helstrom: (1 - sqrt(1 - |<a|b>|^2)) / 2
    assert helstrom_fock(e0, e1) == pytest.approx(0.5 * (1 - math.sqrt(0.75)), abs=1e-12)


def test_qs_swap_symmetry(built):
    for entry in built.values():
        for key in ("qi", "coherent"):
            r0, r1 = entry[key]
            fwd, rev = QsOracle(r0, r1), QsOracle(r1, r0)
            for s in (0.1, 0.3, 0.5, 0.8):
                assert abs(fwd(s) - rev(1 - s)) <= 1e-8
                assert 0 < fwd(s) <= 1 + 1e-8


def test_qs_matches_gaussian_reference_instance(built):
    entry = built[(0.05, 0.02, 0.2, 0.5)]
    ch, geom = entry["ch"], entry["geom"]
    g0, g1 = (qi_hypothesis_state(ch, geom, h) for h in (1, 2))
    assert abs(qs_fock(*entry["qi"], 0.5) - gaussian_qs(g0, g1, 0.5)) <= 1e-4


def test_helstrom_decreases_with_kappa():
    geom = SceneGeometry.from_rayleigh(0.5)
    pes = []
    for kappa in (0.01, 0.03, 0.06, 0.1):
        ch = ChannelParams(kappa, 0.03, 0.2)
        pes.append(helstrom_fock(*(qi_hypothesis_fock(ch, geom, h) for h in (1, 2))))
    assert np.all(np.diff(pes) < 0)
    assert all(0 <= p <= 0.5 for p in pes)


def test_annihilation():
    a = annihilation(4)
    assert np.allclose(np.diag(a.T @ a), [0, 1, 2, 3])
