"""Gaussian states of the transmitter and of the two target hypotheses.

Conventions: quadratures are ordered ``x_1..x_n, p_1..p_n`` and covariances are
scaled so the vacuum is the identity (thermal mean ``N`` has variance
``2N + 1``).  Means follow ``<x> = 2 Re(alpha)``.

Every builder accepts ``dps``.  When given, matrix entries are mpmath numbers
at that precision (numpy object arrays), which the discrimination routines
evaluate in extended precision.  That is needed when the hypotheses differ by
less than double-precision resolution, e.g. for sub-Rayleigh separations.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import linalg

from .modes import OverlapCoefficients, SceneGeometry, overlap_coefficients

PHYSICAL_TOL = 1e-9
SYMMETRY_TOL = 1e-10


class UnphysicalStateError(ValueError):
    """Covariance violates symmetry, positivity or the uncertainty principle."""


class Hypothesis(enum.IntEnum):
    H1 = 1  # one on-axis target
    H2 = 2  # two targets at +/-theta

    @classmethod
    def coerce(cls, h) -> "Hypothesis":
        if isinstance(h, str):
            return cls[h.upper()]
        return cls(h)


@dataclass(frozen=True)
class ChannelParams:
    """Round-trip transmissivity, signal/noise photons per mode, mode count."""

    kappa: float
    n_s: float
    n_b: float
    m_modes: int = 1

    def __post_init__(self):
        if not 0 <= self.kappa <= 1:
            raise ValueError(f"kappa must lie in [0, 1], got {self.kappa}")
        if not self.n_s > 0:
            raise ValueError(f"n_s must be positive, got {self.n_s}")
        if not self.n_b >= 0:
            raise ValueError(f"n_b must be non-negative, got {self.n_b}")
        if int(self.m_modes) != self.m_modes or self.m_modes < 1:
            raise ValueError(f"m_modes must be a positive integer, got {self.m_modes}")

    @property
    def snr(self) -> float:
        """Received-photon signal-to-noise ratio ``kappa*n_s/n_b``."""
        return self.kappa * self.n_s / self.n_b

    @property
    def n_bar(self) -> float:
        """Mean return photons per mode for the coherent-state transmitter."""
        return self.kappa * self.n_s

    def replace(self, **changes) -> "ChannelParams":
        fields = dict(kappa=self.kappa, n_s=self.n_s, n_b=self.n_b, m_modes=self.m_modes)
        fields.update(changes)
        return ChannelParams(**fields)


@dataclass(frozen=True, eq=False)
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray
    dps: int | None = None

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=object if self.dps else float)
        cov = np.asarray(self.cov, dtype=object if self.dps else float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
            raise ValueError(f"covariance must be square with even size, got {cov.shape}")
        if mean.shape != (cov.shape[0],):
            raise ValueError("mean length must match the covariance size")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.cov.shape[0] // 2

    def as_float(self) -> "GaussianState":
        if self.dps is None:
            return self
        return GaussianState(self.mean.astype(float), self.cov.astype(float))


def symplectic_form(n: int) -> np.ndarray:
    """``Omega`` for xxpp ordering."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def _numbers(dps):
    """Scalar constructors for float or extended-precision builds."""
    if dps is None:
        return float, math.sqrt
    return mpmath.mpf, mpmath.sqrt


def _assemble(x_block, p_block, dps):
    n = len(x_block)
    zero = mpmath.mpf(0) if dps else 0.0
    cov = np.full((2 * n, 2 * n), zero, dtype=object if dps else float)
    cov[:n, :n] = np.array(x_block, dtype=cov.dtype)
    cov[n:, n:] = np.array(p_block, dtype=cov.dtype)
    return cov


def spdc_source_state(n_s: float, dps: int | None = None) -> GaussianState:
    """Two-mode squeezed vacuum of one signal-idler pair (modes S, I)."""
    if not n_s > 0:
        raise ValueError(f"n_s must be positive, got {n_s}")
    with mpmath.workdps(dps or 15):
        num, sqrt = _numbers(dps)
        ns = num(n_s)
        s = 2 * ns + 1
        cq = 2 * sqrt(ns * (ns + 1))
        cov = _assemble([[s, cq], [cq, s]], [[s, -cq], [-cq, s]], dps)
        return GaussianState(np.full(4, num(0), dtype=cov.dtype), cov, dps)


def _qi_entries(p: ChannelParams, coeffs: OverlapCoefficients, dps):
    num, sqrt = _numbers(dps)
    kappa, n_s, n_b = num(p.kappa), num(p.n_s), num(p.n_b)
    s = 2 * n_s + 1
    c_q = 2 * sqrt(n_s * (n_s + 1))
    d1 = 2 * n_b + 1
    c1 = sqrt(kappa) * c_q
    a, b = num(coeffs.a), num(coeffs.b)
    return dict(
        S=s, Cq=c_q, D1=d1, C1=c1, A1=2 * kappa * n_s + d1,
        A2=2 * a * a * kappa * n_s + d1, B2=2 * a * b * kappa * n_s, C2=a * c1,
        D2=2 * b * b * kappa * n_s + d1, E2=b * c1,
    )


def qi_hypothesis_state(p: ChannelParams, geom: SceneGeometry, h, dps: int | None = None) -> GaussianState:
    """Return-idler state on modes (phi1, phi2, I) under hypothesis ``h``.

    Raises:
        DegenerateGeometryError: if ``theta`` is too small for two return modes.
    """
    h = Hypothesis.coerce(h)
    coeffs = overlap_coefficients(geom, dps=dps).require_two_mode()
    with mpmath.workdps(dps or 15):
        e = _qi_entries(p, coeffs, dps)
        zero = mpmath.mpf(0) if dps else 0.0
        if h is Hypothesis.H1:
            x = [[e["A1"], zero, e["C1"]], [zero, e["D1"], zero], [e["C1"], zero, e["S"]]]
        else:
            x = [[e["A2"], e["B2"], e["C2"]], [e["B2"], e["D2"], e["E2"]], [e["C2"], e["E2"], e["S"]]]
        # p block: idler correlations change sign, return-return ones do not
        sign = np.array([[1, 1, -1], [1, 1, -1], [-1, -1, 1]])
        p_blk = [[x[i][j] * int(sign[i, j]) for j in range(3)] for i in range(3)]
        cov = _assemble(x, p_blk, dps)
        return GaussianState(np.full(6, zero, dtype=cov.dtype), cov, dps)


def coherent_hypothesis_state(p: ChannelParams, geom: SceneGeometry, h, dps: int | None = None) -> GaussianState:
    """Displaced thermal return on modes (phi1, phi2) for a coherent-state transmitter.

    The collected mean photon number per mode is ``kappa * n_s`` under both
    hypotheses; only the split between ``phi1`` and ``phi2`` differs.
    """
    h = Hypothesis.coerce(h)
    coeffs = overlap_coefficients(geom, dps=dps).require_two_mode()
    with mpmath.workdps(dps or 15):
        num, sqrt = _numbers(dps)
        amp = 2 * sqrt(num(p.kappa) * num(p.n_s))
        var = 2 * num(p.n_b) + 1
        zero = num(0)
        if h is Hypothesis.H1:
            a, b = num(1), zero
        else:
            a, b = num(coeffs.a), num(coeffs.b)
        mean = np.array([amp * a, amp * b, zero, zero], dtype=object if dps else float)
        cov = _assemble([[var, zero], [zero, var]], [[var, zero], [zero, var]], dps)
        return GaussianState(mean, cov, dps)


def _check_cov(cov):
    if not np.all(np.isfinite(cov)):
        raise UnphysicalStateError("covariance has non-finite entries")
    asym = np.max(np.abs(cov - cov.T)) if cov.size else 0.0
    if asym > SYMMETRY_TOL * max(1.0, np.max(np.abs(cov))):
        raise UnphysicalStateError(f"covariance not symmetric (residual {asym:.2e})")


def _sym_sqrt(cov):
    w, u = linalg.eigh((cov + cov.T) / 2)
    if w[0] <= 0:
        raise UnphysicalStateError("covariance is not positive definite")
    return (u * np.sqrt(w)) @ u.T


def symplectic_eigenvalues(cov) -> np.ndarray:
    """Williamson spectrum of ``cov``, descending, one value per mode.

    The moduli of the eigenvalues of ``i*Omega*cov`` equal the positive
    eigenvalues of the Hermitian matrix ``i * R Omega R`` with ``R = cov**(1/2)``,
    which is how they are computed here.
    """
    cov = np.asarray(cov, dtype=float)
    _check_cov(cov)
    n = cov.shape[0] // 2
    root = _sym_sqrt(cov)
    k = root @ symplectic_form(n) @ root
    w = linalg.eigvalsh(1j * k)
    # eigenvalues come in +/- pairs; keep the positive half
    return np.sort(w[n:])[::-1]


@dataclass(frozen=True)
class StateDiagnostics:
    symmetry_residual: float
    min_symplectic_eigenvalue: float
    mean_finite: bool
    message: str = ""

    @property
    def passed(self) -> bool:
        return (
            self.mean_finite
            and self.symmetry_residual <= SYMMETRY_TOL
            and self.min_symplectic_eigenvalue >= 1 - PHYSICAL_TOL
        )


def validate_state(state: GaussianState) -> StateDiagnostics:
    """Symmetry, uncertainty-principle and finiteness diagnostics (never raises)."""
    s = state.as_float()
    cov = s.cov
    mean_ok = bool(np.all(np.isfinite(s.mean)))
    if not np.all(np.isfinite(cov)):
        return StateDiagnostics(math.inf, -math.inf, mean_ok, "non-finite covariance")
    asym = float(np.max(np.abs(cov - cov.T)))
    try:
        nu_min = float(symplectic_eigenvalues((cov + cov.T) / 2)[-1])
        msg = ""
    except UnphysicalStateError as exc:
        nu_min, msg = -math.inf, str(exc)
    return StateDiagnostics(asym, nu_min, mean_ok, msg)
