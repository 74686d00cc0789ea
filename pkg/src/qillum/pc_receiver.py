"""Phase-conjugate receiver for the entangled transmitter.

Per mode pair the ``phi2`` return ``a`` is phase conjugated,
``c = a^dagger + sqrt(2) v`` with ``v`` in vacuum, mixed with the idler ``b``
on a 50-50 beam splitter, and the two outputs are photodetected.  The count
difference is ``N = c^dagger b + b^dagger c``; the decision statistic is the
sum of ``N`` over the ``M`` mode pairs, compared against a single threshold.

For a zero-mean Gaussian return-idler state Wick factoring gives

    <N>   = 2 Re <ab>
    Var N = 2 Re(<aa><bb> + 2<ab>^2) + 2|<ab>|^2 + 2|<a^dag b>|^2
            - 4 (Re <ab>)^2 + n_a n_b + (n_a + 1)(n_b + 1) + 2 n_b

where ``n_a, n_b`` are the mean photon numbers.  The vacuum port only adds
the ``2 n_b`` term.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .gaussian_states import ChannelParams, Hypothesis, qi_hypothesis_state
from .modes import SceneGeometry

# mode indices within the (phi1, phi2, I) return-idler state
PHI2, IDLER = 1, 2


@dataclass(frozen=True)
class StatisticMoments:
    mean_h1: float
    mean_h2: float
    var_h1: float
    var_h2: float

    def __post_init__(self):
        if not (self.var_h1 > 0 and self.var_h2 > 0):
            raise ValueError("statistic variances must be positive")

    def scaled(self, m_modes: int) -> "StatisticMoments":
        return StatisticMoments(
            m_modes * self.mean_h1, m_modes * self.mean_h2, m_modes * self.var_h1, m_modes * self.var_h2
        )


def complex_moments(cov: np.ndarray, j: int, k: int) -> dict:
    """Normally ordered second moments of modes ``j`` and ``k`` from an xxpp covariance.

    Returns ``n_j``, ``n_k``, ``<a_j a_j>``, ``<a_k a_k>``, ``<a_j a_k>`` and
    ``<a_j^dagger a_k>`` for a zero-mean state (vacuum variance 1).
    """
    n = cov.shape[0] // 2
    xj, xk, pj, pk = j, k, n + j, n + k

    def number(i, pi):
        return (cov[i, i] + cov[pi, pi] - 2.0) / 4.0

    def squeeze(i, pi):
        return (cov[i, i] - cov[pi, pi] + 2j * cov[i, pi]) / 4.0

    return dict(
        n_a=number(xj, pj),
        n_b=number(xk, pk),
        m_aa=squeeze(xj, pj),
        m_bb=squeeze(xk, pk),
        m_ab=(cov[xj, xk] - cov[pj, pk] + 1j * (cov[xj, pk] + cov[pj, xk])) / 4.0,
        c_ab=(cov[xj, xk] + cov[pj, pk] + 1j * (cov[xj, pk] - cov[pj, xk])) / 4.0,
    )


def count_difference_moments(cov: np.ndarray, signal: int = PHI2, idler: int = IDLER) -> tuple[float, float]:
    """Per-mode mean and variance of the balanced count difference ``N``."""
    m = complex_moments(np.asarray(cov, dtype=float), signal, idler)
    n_a, n_b, m_ab = m["n_a"], m["n_b"], m["m_ab"]
    mean = 2.0 * m_ab.real
    var_y = (
        2.0 * (m["m_aa"] * m["m_bb"] + 2.0 * m_ab**2).real
        + 2.0 * abs(m_ab) ** 2
        + 2.0 * abs(m["c_ab"]) ** 2
        - mean**2
        + n_a * n_b
        + (n_a + 1.0) * (n_b + 1.0)
    )
    return float(mean), float(var_y + 2.0 * n_b)


def pc_statistic_moments(p: ChannelParams, geom: SceneGeometry, m_modes: int | None = None) -> StatisticMoments:
    """Mean and variance of the ``M``-mode statistic under each hypothesis.

    ``m_modes`` defaults to ``p.m_modes``.
    """
    m_modes = p.m_modes if m_modes is None else m_modes
    per_mode = []
    for h in Hypothesis:
        cov = qi_hypothesis_state(p, geom, h).cov
        per_mode.append(count_difference_moments(cov))
    (mu1, var1), (mu2, var2) = per_mode
    return StatisticMoments(mu1, mu2, var1, var2).scaled(m_modes)


def pc_threshold(mom: StatisticMoments) -> float:
    s1, s2 = math.sqrt(mom.var_h1), math.sqrt(mom.var_h2)
    return (s2 * mom.mean_h1 + s1 * mom.mean_h2) / (s1 + s2)


def pc_error_probability(mom: StatisticMoments) -> float:
    """Gaussian-approximation error probability of the single-threshold test."""
    s1, s2 = math.sqrt(mom.var_h1), math.sqrt(mom.var_h2)
    d = abs(mom.mean_h2 - mom.mean_h1) / (s1 + s2)
    return float(0.5 * erfc(d / math.sqrt(2.0)))


def pc_error_exponent(p: ChannelParams, geom: SceneGeometry) -> float:
    """Per-mode exponent ``(mu2 - mu1)**2 / (2 (sigma1 + sigma2)**2)``."""
    mom = pc_statistic_moments(p, geom, m_modes=1)
    spread = math.sqrt(mom.var_h1) + math.sqrt(mom.var_h2)
    return (mom.mean_h2 - mom.mean_h1) ** 2 / (2.0 * spread**2)
