"""Chernoff-type bounds for discriminating two Gaussian states.

``Q_s = Tr[rho0**s rho1**(1-s)]`` is evaluated from the Williamson spectra of
the two covariances.  For a state with covariance ``V = S diag(nu) S^T`` the
power ``rho**p`` is, up to normalization, Gaussian with covariance
``S diag(Lambda_p(nu)) S^T`` where

    Lambda_p(nu) = ((nu+1)**p + (nu-1)**p) / ((nu+1)**p - (nu-1)**p)
    G_p(nu)      = 2**p / ((nu+1)**p - (nu-1)**p)

and ``Q_s = 2**n prod G_s(alpha) G_{1-s}(beta) / sqrt(det Sigma_s)
* exp(-d^T Sigma_s^{-1} d / 2)`` with ``Sigma_s = V0(s) + V1(1-s)`` and ``d``
the mean difference.  The symplectic matrix ``S`` is never formed: with
``R = V**(1/2)`` and ``K = R Omega R``, ``S f(D) S^T = R g(K^T K) R`` where
``g(nu**2) = f(nu)/nu``, which needs only symmetric eigendecompositions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import mpmath
import numpy as np
from scipy import linalg

from .gaussian_states import (
    PHYSICAL_TOL,
    GaussianState,
    UnphysicalStateError,
    _check_cov,
    symplectic_form,
)

S_EPS = 1e-6
# (nu - 1)**p is not analytic at nu = 1, so eigensolver noise on a pure mode
# would be amplified; eigenvalues this close to the vacuum are snapped onto it
PURE_SNAP = PHYSICAL_TOL
GRID_POINTS = 21


class NumericalError(ArithmeticError):
    """A decomposition or bound evaluation failed numerically."""


@dataclass(frozen=True)
class BoundResult:
    s_star: float
    q_s_star: float
    exponent: float
    m_modes: int = 1

    @property
    def pe_bound(self) -> float:
        """``Q_QCB**M / 2`` evaluated from the exponent."""
        return pe_bound_from_exponent(self.exponent, self.m_modes)

    def with_modes(self, m_modes: int) -> "BoundResult":
        return BoundResult(self.s_star, self.q_s_star, self.exponent, m_modes)


def _lambda_g(nu, p):
    """Vectorized ``Lambda_p(nu)`` and ``log G_p(nu)`` for ``nu >= 1``."""
    nu = np.maximum(nu, 1.0)
    with np.errstate(divide="ignore"):
        log_ratio = np.log1p(-2.0 / (nu + 1.0))  # log((nu-1)/(nu+1)), -inf at nu=1
    ratio_p = np.exp(p * log_ratio)
    one_minus = -np.expm1(p * log_ratio)
    lam = (1.0 + ratio_p) / one_minus
    log_g = p * math.log(2.0) - p * np.log(nu + 1.0) - np.log(one_minus)
    return lam, log_g


def _power_cov(cov, p):
    n = cov.shape[0] // 2
    w, u = linalg.eigh(cov)
    if w[0] <= 0:
        raise UnphysicalStateError("covariance is not positive definite")
    root = (u * np.sqrt(w)) @ u.T
    k = root @ symplectic_form(n) @ root
    w2, u2 = linalg.eigh(k.T @ k)
    nu = np.sqrt(np.clip(w2, 0.0, None))
    if nu[0] < 1 - PHYSICAL_TOL:
        raise UnphysicalStateError(f"symplectic eigenvalue {nu[0]:.12g} below vacuum")
    nu = np.where(nu < 1 + PURE_SNAP, 1.0, nu)
    lam, log_g = _lambda_g(nu, p)
    nu = np.maximum(nu, 1.0)
    cov_p = root @ ((u2 * (lam / nu)) @ u2.T) @ root
    # each symplectic eigenvalue appears twice in K^T K
    return cov_p, 0.5 * float(np.sum(log_g))


def _log_qs_float(rho0: GaussianState, rho1: GaussianState, s: float) -> float:
    v0, g0 = _power_cov(rho0.cov, s)
    v1, g1 = _power_cov(rho1.cov, 1.0 - s)
    sigma = v0 + v1
    sigma = (sigma + sigma.T) / 2
    try:
        chol = linalg.cho_factor(sigma)
    except linalg.LinAlgError as exc:
        raise NumericalError("Chernoff covariance sum is not positive definite") from exc
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol[0]))))
    d = rho0.mean - rho1.mean
    quad = float(d @ linalg.cho_solve(chol, d))
    return rho0.n_modes * math.log(2.0) + g0 + g1 - 0.5 * logdet - 0.5 * quad


def _mp_power_cov(cov, p, omega):
    w, u = mpmath.eigsy(cov)
    if min(w) <= 0:
        raise UnphysicalStateError("covariance is not positive definite")
    root = u * mpmath.diag([mpmath.sqrt(x) for x in w]) * u.T
    k = root * omega * root
    w2, u2 = mpmath.eigsy(k.T * k)
    nus = [mpmath.sqrt(max(x, 0)) for x in w2]
    if min(nus) < 1 - PHYSICAL_TOL:
        raise UnphysicalStateError("symplectic eigenvalue below vacuum")
    diag, log_g = [], mpmath.mpf(0)
    snap = mpmath.mpf(10) ** (10 - mpmath.mp.dps)
    for nu in nus:
        nu = mpmath.mpf(1) if nu < 1 + snap else nu
        log_ratio = mpmath.log((nu - 1) / (nu + 1)) if nu > 1 else mpmath.ninf
        ratio_p = mpmath.exp(p * log_ratio) if nu > 1 else mpmath.mpf(0)
        one_minus = -mpmath.expm1(p * log_ratio) if nu > 1 else mpmath.mpf(1)
        diag.append((1 + ratio_p) / one_minus / nu)
        log_g += p * mpmath.log(2) - p * mpmath.log(nu + 1) - mpmath.log(one_minus)
    return root * u2 * mpmath.diag(diag) * u2.T * root, log_g / 2


def _log_qs_mp(rho0: GaussianState, rho1: GaussianState, s: float, dps: int):
    with mpmath.workdps(dps):
        n = rho0.n_modes
        omega = mpmath.matrix(symplectic_form(n).tolist())
        s = mpmath.mpf(s)
        v0, g0 = _mp_power_cov(mpmath.matrix(rho0.cov.tolist()), s, omega)
        v1, g1 = _mp_power_cov(mpmath.matrix(rho1.cov.tolist()), 1 - s, omega)
        sigma = v0 + v1
        sigma = (sigma + sigma.T) / 2
        try:
            low = mpmath.cholesky(sigma)
        except ValueError as exc:
            raise NumericalError("Chernoff covariance sum is not positive definite") from exc
        logdet = 2 * mpmath.fsum(mpmath.log(low[i, i]) for i in range(2 * n))
        d = mpmath.matrix([x - y for x, y in zip(rho0.mean, rho1.mean)])
        quad = (d.T * mpmath.cholesky_solve(sigma, d))[0] if any(d) else mpmath.mpf(0)
        return n * mpmath.log(2) + g0 + g1 - logdet / 2 - quad / 2


def _check_pair(rho0: GaussianState, rho1: GaussianState):
    if rho0.n_modes != rho1.n_modes:
        raise ValueError(f"mode-count mismatch: {rho0.n_modes} vs {rho1.n_modes}")
    for rho in (rho0, rho1):
        _check_cov(rho.as_float().cov)


def _pair_dps(rho0, rho1):
    levels = [r.dps for r in (rho0, rho1) if r.dps]
    return max(levels) if levels else None


def log_qs(rho0: GaussianState, rho1: GaussianState, s: float):
    """Natural log of ``Q_s``; an mpmath number when either state is extended precision."""
    _check_pair(rho0, rho1)
    if s <= 0 or s >= 1:
        return 0.0
    dps = _pair_dps(rho0, rho1)
    if dps:
        return _log_qs_mp(rho0, rho1, s, dps)
    return _log_qs_float(rho0, rho1, s)


def gaussian_qs(rho0: GaussianState, rho1: GaussianState, s: float) -> float:
    """``Tr[rho0**s rho1**(1-s)]``; 1 at the endpoints ``s = 0, 1`` by convention.

    Raises:
        UnphysicalStateError: for a covariance below the vacuum limit.
        NumericalError: if the covariance sum cannot be factored.
    """
    lq = log_qs(rho0, rho1, s)
    return float(mpmath.exp(lq)) if _pair_dps(rho0, rho1) else math.exp(lq)


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-6, max_iter: int = 200):
    """Minimize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def qcb(rho0: GaussianState, rho1: GaussianState, tol: float = 1e-6, m_modes: int = 1) -> BoundResult:
    """Quantum Chernoff bound: minimize ``Q_s`` over ``s``.

    A 21-point grid on ``[eps, 1-eps]`` locates the basin, then golden-section
    search refines ``s`` to ``tol``.  The objective is ``log Q_s`` so that
    extended-precision states keep their resolution.
    """
    if not 0 < tol <= 1e-3:
        raise ValueError("tol must lie in (0, 1e-3]")
    _check_pair(rho0, rho1)
    f = lambda s: log_qs(rho0, rho1, s)  # noqa: E731
    grid = np.linspace(S_EPS, 1 - S_EPS, GRID_POINTS)
    values = [f(s) for s in grid]
    i = int(np.argmin(values))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, GRID_POINTS - 1)]
    s_star, log_q = golden_section(f, lo, hi, tol)
    if values[i] < log_q:
        s_star, log_q = grid[i], values[i]
    exponent = -float(log_q)
    if exponent < 0:
        if exponent < -1e-12:
            raise NumericalError(f"Q_s exceeds 1 by {-exponent:.3e}")
        exponent = 0.0
    q = float(mpmath.exp(log_q)) if _pair_dps(rho0, rho1) else math.exp(log_q)
    return BoundResult(float(s_star), min(q, 1.0), exponent, m_modes)


def bhattacharyya(rho0: GaussianState, rho1: GaussianState) -> float:
    """``Q_{1/2}``, never smaller than the Chernoff quantity."""
    return gaussian_qs(rho0, rho1, 0.5)


def pe_bound(q: float, m: int) -> float:
    """``min(q**m / 2, 1/2)`` computed in log space."""
    if not 0 < q <= 1:
        raise ValueError(f"q must lie in (0, 1], got {q}")
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")
    return min(0.5 * math.exp(m * math.log(q)), 0.5)


def pe_bound_from_exponent(exponent: float, m: int) -> float:
    return min(0.5 * math.exp(-m * exponent), 0.5)


def exponent_advantage_db(r_a: float, r_b: float) -> float:
    """Ratio of two error exponents in decibels."""
    if r_a <= 0 or r_b <= 0:
        raise ValueError("error exponents must be positive")
    return 10.0 * math.log10(r_a / r_b)
