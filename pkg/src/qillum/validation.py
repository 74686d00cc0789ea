"""Gaussian-path versus Fock-oracle consistency checks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discrimination import bhattacharyya, gaussian_qs, qcb
from .fock_oracle import (
    QsOracle,
    coherent_hypothesis_fock,
    helstrom_fock,
    quadrature_moments,
    qi_hypothesis_fock,
)
from .gaussian_states import (
    ChannelParams,
    GaussianState,
    coherent_hypothesis_state,
    qi_hypothesis_state,
    validate_state,
)
from .modes import SceneGeometry

QS_TOL = 1e-4
MOMENT_TOL = 1e-6
ORDER_TOL = 1e-9
S_VALUES = (0.3, 0.5, 0.7)


@dataclass(frozen=True)
class OracleInstance:
    label: str
    channel: ChannelParams
    geometry: SceneGeometry


def _instance(label, kappa, n_s, n_b, theta_rayleigh):
    return OracleInstance(label, ChannelParams(kappa, n_s, n_b), SceneGeometry.from_rayleigh(theta_rayleigh))


# small-photon-number regime where truncated Fock spaces stay desk-sized
DEFAULT_INSTANCES = (
    _instance("i01", 0.05, 0.02, 0.2, 0.5),
    _instance("i02", 0.1, 0.05, 0.5, 0.5),
    _instance("i03", 0.1, 0.05, 0.1, 0.25),
    _instance("i04", 0.01, 0.01, 0.05, 0.5),
    _instance("i05", 0.1, 0.01, 0.5, 1.0),
    _instance("i06", 0.05, 0.05, 0.3, 0.75),
    _instance("i07", 0.1, 0.03, 0.0, 0.5),
    _instance("i08", 0.02, 0.05, 0.4, 0.3),
    _instance("i09", 0.1, 0.04, 0.25, 1.5),
    _instance("i10", 0.08, 0.02, 0.15, 0.1),
    _instance("i11", 0.1, 0.05, 0.5, 2.0),
)


@dataclass(frozen=True)
class CheckResult:
    check: str
    instance: str
    residual: float
    tolerance: float
    passed: bool


def _check(name, label, residual, tol) -> CheckResult:
    residual = float(residual)
    return CheckResult(name, label, residual, tol, bool(residual <= tol))


def physicality_checks(label: str, states: dict[str, GaussianState]) -> list[CheckResult]:
    """One pass/fail per state; residual is the vacuum deficit of the smallest symplectic eigenvalue."""
    out = []
    for name, state in states.items():
        diag = validate_state(state)
        deficit = max(0.0, 1.0 - diag.min_symplectic_eigenvalue) if diag.passed or np.isfinite(diag.min_symplectic_eigenvalue) else np.inf
        out.append(CheckResult(f"physical_{name}", label, float(deficit), 1e-9, diag.passed))
    return out


def instance_checks(inst: OracleInstance) -> list[CheckResult]:
    ch, geom, label = inst.channel, inst.geometry, inst.label
    results = []
    gauss = {
        "qi": (qi_hypothesis_state(ch, geom, 1), qi_hypothesis_state(ch, geom, 2)),
        "coherent": (coherent_hypothesis_state(ch, geom, 1), coherent_hypothesis_state(ch, geom, 2)),
    }
    fock = {
        "qi": (qi_hypothesis_fock(ch, geom, 1), qi_hypothesis_fock(ch, geom, 2)),
        "coherent": (coherent_hypothesis_fock(ch, geom, 1), coherent_hypothesis_fock(ch, geom, 2)),
    }
    results += physicality_checks(
        label, {f"{t}_h{k + 1}": gauss[t][k] for t in gauss for k in range(2)}
    )
    for t in ("qi", "coherent"):
        g0, g1 = gauss[t]
        f0, f1 = fock[t]
        for k, (g, f) in enumerate(((g0, f0), (g1, f1))):
            mean, cov = quadrature_moments(f)
            resid = max(np.max(np.abs(cov - g.cov)), np.max(np.abs(mean - g.mean)))
            results.append(_check(f"moments_{t}_h{k + 1}", label, resid, MOMENT_TOL))
        oracle = QsOracle(f0, f1)
        for s in S_VALUES:
            results.append(_check(f"qs_{t}_s{s}", label, abs(gaussian_qs(g0, g1, s) - oracle(s)), QS_TOL))
        bound = qcb(g0, g1)
        q_half = bhattacharyya(g0, g1)
        pe = helstrom_fock(f0, f1)
        results.append(_check(f"helstrom_le_qcb_{t}", label, max(0.0, pe - 0.5 * bound.q_s_star), ORDER_TOL))
        results.append(_check(f"qcb_le_bhattacharyya_{t}", label, max(0.0, bound.q_s_star - q_half), ORDER_TOL))
    return results


def kappa_zero_checks(channel: ChannelParams | None = None, geometry: SceneGeometry | None = None) -> list[CheckResult]:
    """With no return signal the hypotheses coincide and ``Q_s = 1``."""
    ch = channel or ChannelParams(0.0, 0.02, 0.2)
    geom = geometry or SceneGeometry.from_rayleigh(0.5)
    out = []
    for t, build in (("qi", qi_hypothesis_state), ("coherent", coherent_hypothesis_state)):
        g0, g1 = build(ch, geom, 1), build(ch, geom, 2)
        resid = max(abs(gaussian_qs(g0, g1, s) - 1.0) for s in S_VALUES)
        out.append(_check(f"kappa0_qs_{t}", "kappa0", resid, 1e-12))
    return out


def validate(instances=DEFAULT_INSTANCES) -> list[CheckResult]:
    """Run the full oracle-equivalence and bound-ordering suite."""
    results = []
    for inst in instances:
        results += instance_checks(inst)
    results += kappa_zero_checks()
    return results


def validate_point(channel: ChannelParams, geometry: SceneGeometry) -> list[CheckResult]:
    """The same checks for a single user-chosen operating point."""
    results = instance_checks(OracleInstance("custom", channel, geometry))
    if channel.kappa == 0:
        results += kappa_zero_checks(channel, geometry)
    return results
