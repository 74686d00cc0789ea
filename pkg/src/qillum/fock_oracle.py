"""Brute-force truncated-Fock construction of the hypothesis states.

The states are built from physical circuits (two-mode squeezed vacuum, beam
splitters, thermal noise injection, displacements) on a truncated number
basis, and ``Q_s`` and the Helstrom error probability are obtained by dense
Hermitian eigendecomposition.  Nothing here reuses the Gaussian formulas, so
the two routes check each other.

Beam splitters are built sector by sector in total photon number, so they act
exactly on every component whose total fits below the cutoff.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.csgraph import connected_components

from .gaussian_states import ChannelParams, Hypothesis
from .modes import SceneGeometry, overlap_coefficients

TAIL_TOL = 1e-8
# extra levels above the probability cutoff so second moments converge too
HEADROOM = 2
CLIP_TOL = 1e-14
MAX_CUTOFF = 60


class CutoffError(ValueError):
    """Requested cutoff leaves too much probability in the truncated tail."""


@dataclass
class FockOperator:
    """Dense operator (density matrix) or pure vector on a truncated tensor basis."""

    dims: tuple[int, ...]
    matrix: np.ndarray
    pure: bool = field(default=False)

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        size = int(np.prod(self.dims))
        expected = (size,) if self.pure else (size, size)
        if self.matrix.shape != expected:
            raise ValueError(f"matrix shape {self.matrix.shape} does not match dims {self.dims}")

    def density(self) -> "FockOperator":
        if not self.pure:
            return self
        v = self.matrix
        return FockOperator(self.dims, np.outer(v, v.conj()))

    def trace(self) -> float:
        if self.pure:
            return float(np.vdot(self.matrix, self.matrix).real)
        return float(np.trace(self.matrix).real)


def thermal_tail(mean: float, cutoff: int) -> float:
    """Probability that a thermal state of the given mean has ``n >= cutoff``."""
    return (mean / (mean + 1.0)) ** cutoff if mean > 0 else 0.0


def cutoff_for(mean: float, tail_tol: float = TAIL_TOL) -> int:
    """Smallest cutoff with thermal tail weight below ``tail_tol``, plus headroom."""
    if mean <= 0:
        return 1 + HEADROOM
    c = math.ceil(math.log(tail_tol) / math.log(mean / (mean + 1.0))) + HEADROOM
    if c > MAX_CUTOFF:
        raise CutoffError(f"mean photon number {mean} needs cutoff {c} > {MAX_CUTOFF}")
    return c


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), k=1)


def tmsv_fock(n_s: float, cutoff: int, tail_tol: float = TAIL_TOL) -> FockOperator:
    """Pure two-mode squeezed vacuum ``sum_n sqrt(N^n/(N+1)^(n+1)) |n, n>``."""
    if thermal_tail(n_s, cutoff) > tail_tol:
        raise CutoffError(f"cutoff {cutoff} too small for n_s={n_s}")
    n = np.arange(cutoff)
    if n_s == 0:
        coeff = (n == 0).astype(float)
    else:
        coeff = np.sqrt((n_s / (n_s + 1.0)) ** n / (n_s + 1.0))
    vec = np.zeros((cutoff, cutoff), dtype=complex)
    vec[n, n] = coeff
    return FockOperator((cutoff, cutoff), vec.ravel(), pure=True)


def thermal_fock(n_b: float, cutoff: int, tail_tol: float = TAIL_TOL) -> FockOperator:
    """Diagonal Bose-Einstein density matrix."""
    if thermal_tail(n_b, cutoff) > tail_tol:
        raise CutoffError(f"cutoff {cutoff} too small for n_b={n_b}")
    n = np.arange(cutoff)
    if n_b == 0:
        p = (n == 0).astype(float)
    else:
        p = (n_b / (n_b + 1.0)) ** n / (n_b + 1.0)
    return FockOperator((cutoff,), np.diag(p).astype(complex))


def tensor(*ops: FockOperator) -> FockOperator:
    dims, out = (), None
    pure = all(op.pure for op in ops)
    for op in ops:
        op = op if pure else op.density()
        out = op.matrix if out is None else np.kron(out, op.matrix)
        dims += op.dims
    return FockOperator(dims, out, pure=pure)


@lru_cache(maxsize=64)
def _rotation_unitary(d_i: int, d_j: int, angle: float) -> sparse.csr_matrix:
    """``exp(angle (a^dag b - a b^dag))`` assembled per total-number sector."""
    rows, cols, vals = [], [], []
    for total in range(d_i + d_j - 1):
        ns = [n for n in range(max(0, total - d_j + 1), min(total, d_i - 1) + 1)]
        size = len(ns)
        gen = np.zeros((size, size))
        for col, n in enumerate(ns):
            m = total - n
            # a^dag b: |n, m> -> sqrt((n+1) m) |n+1, m-1>
            if col + 1 < size:
                amp = math.sqrt((n + 1) * m)
                gen[col + 1, col] += amp
                gen[col, col + 1] -= amp
        block = linalg.expm(angle * gen)
        idx = [n * d_j + (total - n) for n in ns]
        for r in range(size):
            for c in range(size):
                if block[r, c] != 0.0:
                    rows.append(idx[r])
                    cols.append(idx[c])
                    vals.append(block[r, c])
    return sparse.csr_matrix((vals, (rows, cols)), shape=(d_i * d_j, d_i * d_j))


def _apply_two_mode(op: FockOperator, unitary, i: int, j: int) -> FockOperator:
    n = len(op.dims)
    order = [i, j] + [k for k in range(n) if k not in (i, j)]
    inverse = np.argsort(order)
    pair = op.dims[i] * op.dims[j]
    if op.pure:
        t = op.matrix.reshape(op.dims).transpose(order).reshape(pair, -1)
        t = unitary @ t
        t = t.reshape([op.dims[k] for k in order]).transpose(inverse)
        return FockOperator(op.dims, t.reshape(-1), pure=True)
    t = op.matrix.reshape(op.dims + op.dims)
    full = order + [n + k for k in order]
    t = t.transpose(full).reshape(pair, -1)
    t = unitary @ t
    # conjugate side: move the bra pair to the front
    shape = [op.dims[k] for k in order] * 2
    t = t.reshape(shape)
    bra_first = list(range(n, 2 * n)) + list(range(n))
    t = t.transpose(bra_first).reshape(pair, -1)
    t = unitary.conj() @ t
    t = t.reshape(shape).transpose(bra_first)
    t = t.transpose(list(inverse) + [n + k for k in inverse])
    size = int(np.prod(op.dims))
    return FockOperator(op.dims, t.reshape(size, size))


def rotate_modes_fock(op: FockOperator, i: int, j: int, angle: float) -> FockOperator:
    """Passive mixing with Heisenberg action ``a_i -> cos*a_i + sin*a_j``, ``a_j -> cos*a_j - sin*a_i``."""
    u = _rotation_unitary(op.dims[i], op.dims[j], float(angle))
    return _apply_two_mode(op, u, i, j)


def beamsplitter_fock(op: FockOperator, mode_i: int, mode_j: int, transmissivity: float) -> FockOperator:
    """Beam splitter sending ``sqrt(T) a_i + sqrt(1-T) a_j`` into port ``i``."""
    if not 0 <= transmissivity <= 1:
        raise ValueError("transmissivity must lie in [0, 1]")
    return rotate_modes_fock(op, mode_i, mode_j, math.acos(math.sqrt(transmissivity)))


def phase_shift_fock(op: FockOperator, mode: int, phi: float) -> FockOperator:
    """Apply ``exp(i phi n)`` on one mode."""
    phases = [np.ones(d) for d in op.dims]
    phases[mode] = np.exp(1j * phi * np.arange(op.dims[mode]))
    diag = phases[0]
    for p in phases[1:]:
        diag = np.kron(diag, p)
    if op.pure:
        return FockOperator(op.dims, diag * op.matrix, pure=True)
    return FockOperator(op.dims, diag[:, None] * op.matrix * diag.conj()[None, :])


def partial_trace(op: FockOperator, keep: list[int]) -> FockOperator:
    n = len(op.dims)
    drop = [k for k in range(n) if k not in keep]
    kept_dims = tuple(op.dims[k] for k in keep)
    size = int(np.prod(kept_dims))
    if op.pure:
        t = op.matrix.reshape(op.dims).transpose(keep + drop).reshape(size, -1)
        return FockOperator(kept_dims, t @ t.conj().T)
    t = op.matrix.reshape(op.dims + op.dims)
    letters = "abcdefghijklmnop"
    ket = [letters[k] for k in range(n)]
    bra = [letters[k].upper() if k in keep else letters[k] for k in range(n)]
    out = "".join(ket[k] for k in keep) + "".join(bra[k] for k in keep)
    t = np.einsum("".join(ket) + "".join(bra) + "->" + out, t)
    return FockOperator(kept_dims, t.reshape(size, size))


def pad_mode(op: FockOperator, mode: int, cutoff: int) -> FockOperator:
    """Embed one mode into a larger truncated space (zero amplitude on new levels)."""
    if cutoff < op.dims[mode]:
        raise ValueError("padding cannot shrink a mode")
    dims = list(op.dims)
    dims[mode] = cutoff
    if op.pure:
        t = op.matrix.reshape(op.dims)
        widths = [(0, 0)] * len(dims)
        widths[mode] = (0, cutoff - op.dims[mode])
        return FockOperator(tuple(dims), np.pad(t, widths).reshape(-1), pure=True)
    t = op.matrix.reshape(op.dims + op.dims)
    widths = [(0, 0)] * (2 * len(dims))
    widths[mode] = widths[len(dims) + mode] = (0, cutoff - op.dims[mode])
    size = int(np.prod(dims))
    return FockOperator(tuple(dims), np.pad(t, widths).reshape(size, size))


def default_cutoffs(p: ChannelParams, tail_tol: float = TAIL_TOL) -> dict:
    """Per-mode cutoffs for the return modes and the idler."""
    env_mean = p.n_b / (1.0 - p.kappa) if p.kappa < 1 else 0.0
    idler = cutoff_for(p.n_s, tail_tol)
    # the return mode also carries the attenuated signal, so never below the idler
    ret = max(cutoff_for(max(env_mean, p.n_b + p.kappa * p.n_s), tail_tol), idler)
    return dict(ret=ret, idler=idler)


def qi_hypothesis_fock(
    p: ChannelParams, geom: SceneGeometry, h, cutoffs: dict | None = None, tail_tol: float = TAIL_TOL
) -> FockOperator:
    """Return-idler density matrix on (phi1, phi2, I).

    Circuit: two-mode squeezed vacuum on (S, I); S passes a transmissivity-kappa
    beam splitter whose other port carries thermal light of mean
    ``N_B/(1-kappa)``, so the return carries ``N_B`` noise photons; under H2 the
    return is rotated into (phi1, phi2) against a second ``N_B`` thermal mode
    with amplitudes ``(a, b)``.  Under H1 the second mode is left untouched.
    """
    h = Hypothesis.coerce(h)
    cut = cutoffs or default_cutoffs(p, tail_tol)
    c_r, c_i = cut["ret"], cut["idler"]
    pair = tmsv_fock(p.n_s, c_i, tail_tol)
    pair = pad_mode(pair, 0, c_r)  # (S, I)
    env_mean = p.n_b / (1.0 - p.kappa) if p.kappa < 1 else 0.0
    env = thermal_fock(env_mean, c_r, tail_tol) if p.kappa < 1 else thermal_fock(0.0, c_r)
    # the environment is diagonal: propagate each number state as a pure vector
    weights = np.real(np.diag(env.matrix))
    rho_ri = np.zeros((c_r * c_i, c_r * c_i), dtype=complex)
    for k, w in enumerate(weights):
        if w < 1e-300:
            continue
        ket = np.zeros(c_r, dtype=complex)
        ket[k] = 1.0
        state = tensor(pair, FockOperator((c_r,), ket, pure=True))  # (S, I, E)
        state = beamsplitter_fock(state, 0, 2, p.kappa)
        rho_ri += w * partial_trace(state, [0, 1]).matrix
    ret_idler = FockOperator((c_r, c_i), rho_ri)
    second = thermal_fock(p.n_b, c_r, tail_tol)
    full = tensor(ret_idler, second)  # (R, I, T)
    if h is Hypothesis.H2:
        coeffs = overlap_coefficients(geom).require_two_mode()
        full = rotate_modes_fock(full, 0, 2, math.atan2(coeffs.b, coeffs.a))
        # the rotation leaves -b R + a T in port T; flip its sign
        full = phase_shift_fock(full, 2, math.pi)
    # reorder (R, I, T) -> (phi1, phi2, I)
    d = full.dims
    t = full.matrix.reshape(d + d).transpose(0, 2, 1, 3, 5, 4)
    size = int(np.prod(d))
    return FockOperator((d[0], d[2], d[1]), t.reshape(size, size))


def displacement(alpha: complex, cutoff: int, pad: int = 25) -> np.ndarray:
    """Truncated displacement operator, built in a larger space then cropped."""
    big = cutoff + pad
    a = annihilation(big)
    d = linalg.expm(alpha * a.conj().T - np.conj(alpha) * a)
    return d[:cutoff, :cutoff]


def coherent_hypothesis_fock(
    p: ChannelParams, geom: SceneGeometry, h, cutoffs: dict | None = None, tail_tol: float = TAIL_TOL
) -> FockOperator:
    """Displaced thermal states on (phi1, phi2); amplitude ``sqrt(kappa n_s)``."""
    h = Hypothesis.coerce(h)
    amp = math.sqrt(p.kappa * p.n_s)
    if h is Hypothesis.H1:
        alphas = (amp, 0.0)
    else:
        coeffs = overlap_coefficients(geom).require_two_mode()
        alphas = (amp * coeffs.a, amp * coeffs.b)
    if cutoffs is None:
        c = max(cutoff_for(p.n_b, tail_tol), cutoff_for(p.n_b + p.kappa * p.n_s, tail_tol))
        c += int(math.ceil(4 * amp * amp + 8 * amp))
    else:
        c = cutoffs["ret"]
    modes = []
    for alpha in alphas:
        big = c + 25
        th = thermal_fock(p.n_b, big, tail_tol).matrix
        dm = displacement(alpha, big, pad=25)
        rho = (dm @ th @ dm.conj().T)[:c, :c]
        modes.append(FockOperator((c,), rho))
    return tensor(*modes)


def _hermitian_check(op: FockOperator):
    m = op.matrix
    resid = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if resid > 1e-10:
        raise ValueError(f"operator is not Hermitian (residual {resid:.2e})")


def _blocks(*mats: np.ndarray) -> list[np.ndarray]:
    """Index sets of the common block-diagonal structure of the given matrices."""
    pattern = sum(np.abs(m) for m in mats) > 1e-15
    n_comp, labels = connected_components(sparse.csr_matrix(pattern), directed=False)
    return [np.flatnonzero(labels == c) for c in range(n_comp)]


def _eigh_blocks(mat: np.ndarray, blocks) -> tuple[np.ndarray, list]:
    vals, vecs = [], []
    for idx in blocks:
        w, u = linalg.eigh(mat[np.ix_(idx, idx)])
        vals.append(w)
        vecs.append(u)
    return vals, vecs


def _normalized(op: FockOperator) -> FockOperator:
    """Unit-trace copy; truncation leaves the trace short by the tail weight."""
    op = op.density()
    return FockOperator(op.dims, op.matrix / op.trace())


def _checked_pair(rho0: FockOperator, rho1: FockOperator):
    if rho0.dims != rho1.dims:
        raise ValueError(f"dimension mismatch: {rho0.dims} vs {rho1.dims}")
    rho0, rho1 = rho0.density(), rho1.density()
    _hermitian_check(rho0)
    _hermitian_check(rho1)
    return _normalized(rho0), _normalized(rho1)


class QsOracle:
    """Spectral data of a state pair, reused for ``Q_s`` at several ``s``.

    Both states are renormalized to unit trace first.
    """

    def __init__(self, rho0: FockOperator, rho1: FockOperator):
        rho0, rho1 = _checked_pair(rho0, rho1)
        self.blocks = _blocks(rho0.matrix, rho1.matrix)
        l0, u0 = _eigh_blocks(rho0.matrix, self.blocks)
        l1, u1 = _eigh_blocks(rho1.matrix, self.blocks)
        self._terms = [
            (np.clip(a, 0.0, None) * (a > CLIP_TOL), np.clip(b, 0.0, None) * (b > CLIP_TOL),
             np.abs(x.conj().T @ y) ** 2)
            for a, x, b, y in zip(l0, u0, l1, u1)
        ]

    def __call__(self, s: float) -> float:
        total = 0.0
        for l0, l1, overlap in self._terms:
            total += float(np.power(l0, s) @ overlap @ np.power(l1, 1.0 - s))
        return total


def qs_fock(rho0: FockOperator, rho1: FockOperator, s: float) -> float:
    """``Tr[rho0**s rho1**(1-s)]`` by eigendecomposition; eigenvalues below 1e-14 are dropped."""
    if not 0 < s < 1:
        raise ValueError("s must lie strictly inside (0, 1)")
    return QsOracle(rho0, rho1)(s)


def helstrom_fock(rho0: FockOperator, rho1: FockOperator) -> float:
    """Equal-prior minimum error probability ``(1 - ||rho1 - rho0||_1 / 2) / 2``."""
    rho0, rho1 = _checked_pair(rho0, rho1)
    diff = rho1.matrix - rho0.matrix
    trace_norm = sum(np.sum(np.abs(linalg.eigvalsh(diff[np.ix_(i, i)]))) for i in _blocks(diff))
    return float(min(max(0.5 * (1.0 - 0.5 * trace_norm), 0.0), 0.5))


def mode_operator(dims, mode: int) -> sparse.csr_matrix:
    """Annihilation operator of ``mode`` on the full tensor space (sparse)."""
    out = sparse.identity(1, format="csr")
    for k, d in enumerate(dims):
        factor = sparse.csr_matrix(annihilation(d)) if k == mode else sparse.identity(d, format="csr")
        out = sparse.kron(out, factor, format="csr")
    return out


def _expect(rho: np.ndarray, op) -> complex:
    """``Tr(rho op)`` for a sparse ``op``."""
    coo = op.tocoo()
    return complex(np.sum(rho[coo.col, coo.row] * coo.data))


def quadrature_moments(op: FockOperator) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector and symmetrized covariance (xxpp, vacuum = identity)."""
    rho = op.density().matrix
    n = len(op.dims)
    lowering = [mode_operator(op.dims, k) for k in range(n)]
    ops = [a + a.conj().T for a in lowering] + [-1j * (a - a.conj().T) for a in lowering]
    mean = np.array([_expect(rho, q).real for q in ops])
    cov = np.empty((2 * n, 2 * n))
    for i, qi in enumerate(ops):
        for j in range(i, 2 * n):
            sym = 0.5 * (_expect(rho, qi @ ops[j]) + _expect(rho, ops[j] @ qi)).real
            cov[i, j] = cov[j, i] = sym - mean[i] * mean[j]
    return mean, cov


def pc_count_moments_fock(op: FockOperator, signal: int = 1, idler: int = 2) -> tuple[float, float]:
    """Per-mode mean and variance of the phase-conjugate count difference.

    Appends a vacuum ancilla for the conjugator and evaluates
    ``N = c^dag b + b^dag c`` with ``c = a^dag + sqrt(2) v`` directly.
    """
    reduced = partial_trace(op.density(), [signal, idler])
    vac = np.zeros((3, 3), dtype=complex)
    vac[0, 0] = 1.0
    rho = np.kron(reduced.matrix, vac)
    dims = reduced.dims + (3,)
    a, b, v = (mode_operator(dims, k) for k in range(3))
    c = a.conj().T + math.sqrt(2.0) * v
    n_op = c.conj().T @ b + b.conj().T @ c
    mean = _expect(rho, n_op).real
    second = _expect(rho, n_op @ n_op).real
    return float(mean), float(second - mean * mean)
