"""Experiment orchestration: error-probability sweeps over the number of
mode pairs and minimum-resolvable-angle curves versus received SNR.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import partial
from typing import Iterable, Sequence

import numpy as np

from .discrimination import BoundResult, NumericalError, golden_section, pe_bound_from_exponent, qcb
from .gaussian_states import ChannelParams, coherent_hypothesis_state, qi_hypothesis_state
from .modes import SceneGeometry, overlap_coefficients
from .pc_receiver import pc_error_exponent, pc_error_probability, pc_statistic_moments

TRANSMITTERS = ("coherent", "qi")
HIGH_DPS = 40
# below this exponent double precision no longer resolves Q_s = exp(-R)
AUTO_PRECISION_FLOOR = 1e-9
THETA_LO_RAYLEIGH = 1e-4
THETA_HI_RAYLEIGH = 2.0
SCAN_POINTS = 48
BISECT_RTOL = 1e-4
BISECT_MAX_ITER = 60
# signal brightness searched when inverting for SNR
N_S_RANGE = (1e-10, 1e3)


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    points: int
    spacing: str = "log"

    def __post_init__(self):
        if self.variable not in ("m", "snr"):
            raise ConfigError(f"sweep variable must be 'm' or 'snr', got {self.variable!r}")
        if self.spacing not in ("log", "linear"):
            raise ConfigError(f"spacing must be 'log' or 'linear', got {self.spacing!r}")
        if self.points < 2:
            raise ConfigError("a sweep needs at least 2 points")
        if not self.stop > self.start or (self.spacing == "log" and self.start <= 0):
            raise ConfigError("sweep range must be increasing (and positive for log spacing)")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            vals = np.logspace(math.log10(self.start), math.log10(self.stop), self.points)
        else:
            vals = np.linspace(self.start, self.stop, self.points)
        if self.variable == "m":
            vals = np.unique(np.round(vals).astype(np.int64))
            if len(vals) != self.points:
                raise ConfigError("mode-count grid collapses after rounding to integers")
        return vals


def _default_geometry(fraction: float = 0.5) -> SceneGeometry:
    return SceneGeometry.from_rayleigh(fraction, lambda_s=1.55e-6, d=0.1)


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: SceneGeometry = field(default_factory=_default_geometry)
    channel: ChannelParams = field(default_factory=lambda: ChannelParams(0.01, 0.01, 20.0, 10**6))
    sweep: SweepSpec | None = None
    pe_threshold: float = 0.03
    output: str | None = None
    tol: float = 1e-6
    include_pc: bool = False

    def __post_init__(self):
        if not 0 < self.pe_threshold < 0.5:
            raise ConfigError(f"pe_threshold must lie in (0, 0.5), got {self.pe_threshold}")

    @classmethod
    def from_dict(cls, data: dict, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        base = base or cls()
        try:
            g = dict(asdict(base.geometry))
            g.update({k: v for k, v in data.get("geometry", {}).items() if k != "theta_rayleigh"})
            if "theta_rayleigh" in data.get("geometry", {}):
                g["theta"] = data["geometry"]["theta_rayleigh"] * g["lambda_s"] / g["d"]
            ch = dict(asdict(base.channel))
            ch.update(data.get("channel", {}))
            sweep = base.sweep
            if "sweep" in data:
                sweep = SweepSpec(**data["sweep"])
            return cls(
                geometry=SceneGeometry(**g),
                channel=ChannelParams(**ch),
                sweep=sweep,
                pe_threshold=float(data.get("pe_threshold", base.pe_threshold)),
                output=data.get("output", base.output),
                tol=float(data.get("tol", base.tol)),
                include_pc=bool(data.get("include_pc", base.include_pc)),
            )
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data, base)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["geometry"]["theta_rayleigh"] = self.geometry.rayleigh_fraction
        return out


# M-sweep defaults: N_S = 0.01, N_B = 20, kappa = 0.01, theta = lambda/(2D)
M_SWEEP_DEFAULT = ExperimentConfig(
    channel=ChannelParams(0.01, 0.01, 20.0, 10**6),
    sweep=SweepSpec("m", 1e4, 1e8, 33),
)
# resolution defaults: kappa = 1e-3, N_B = 1, Pe threshold 0.03, SNR swept through N_S
RESOLUTION_DEFAULT = ExperimentConfig(
    channel=ChannelParams(1e-3, 0.01, 1.0, 10**6),
    sweep=SweepSpec("snr", 1e-6, 1e-3, 31),
)


def _states(transmitter: str, channel: ChannelParams, geom: SceneGeometry, dps):
    if transmitter == "coherent":
        build = coherent_hypothesis_state
    elif transmitter == "qi":
        build = qi_hypothesis_state
    else:
        raise ConfigError(f"unknown transmitter {transmitter!r}")
    return build(channel, geom, 1, dps=dps), build(channel, geom, 2, dps=dps)


def transmitter_bound(
    transmitter: str,
    channel: ChannelParams,
    geom: SceneGeometry,
    tol: float = 1e-6,
    dps: int | None = None,
    auto_precision: bool = True,
) -> BoundResult:
    """Chernoff bound for one transmitter at one operating point.

    With ``auto_precision`` a double-precision exponent below 1e-9 is
    recomputed at 40 significant digits.
    """
    rho0, rho1 = _states(transmitter, channel, geom, dps)
    result = qcb(rho0, rho1, tol, channel.m_modes)
    if dps is None and auto_precision and result.exponent < AUTO_PRECISION_FLOOR:
        rho0, rho1 = _states(transmitter, channel, geom, HIGH_DPS)
        result = qcb(rho0, rho1, tol, channel.m_modes)
    return result


def _exponent(transmitter: str, channel: ChannelParams, geom: SceneGeometry, tol: float, dps) -> float:
    if overlap_coefficients(geom).degenerate:
        return 0.0
    if transmitter == "pc":
        return pc_error_exponent(channel, geom)
    return transmitter_bound(transmitter, channel, geom, tol, dps, auto_precision=False).exponent


def _map(fn, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ----------------------------------------------------------------------------
# error probability versus number of mode pairs


def m_sweep(cfg: ExperimentConfig) -> list[dict]:
    """Rows ``(M, Pe_CS_QCB, Pe_QI_QCB, Pe_PC)`` over the configured M grid."""
    if cfg.sweep is None or cfg.sweep.variable != "m":
        raise ConfigError("m_sweep needs a sweep over 'm'")
    ch, geom = cfg.channel, cfg.geometry
    r_cs = transmitter_bound("coherent", ch, geom, cfg.tol).exponent
    r_qi = transmitter_bound("qi", ch, geom, cfg.tol).exponent
    per_mode = pc_statistic_moments(ch, geom, m_modes=1)
    rows = []
    for m in cfg.sweep.values():
        m = int(m)
        rows.append(
            dict(
                M=m,
                Pe_CS_QCB=pe_bound_from_exponent(r_cs, m),
                Pe_QI_QCB=pe_bound_from_exponent(r_qi, m),
                Pe_PC=pc_error_probability(per_mode.scaled(m)),
            )
        )
    return rows


# ----------------------------------------------------------------------------
# resolution


def required_exponent(m_modes: int, pe_threshold: float) -> float:
    """Exponent at which ``exp(-M R) / 2`` reaches ``pe_threshold``."""
    return math.log(1.0 / (2.0 * pe_threshold)) / m_modes


def _meets(transmitter, channel, geom, m, pe_threshold, tol, dps) -> bool:
    if transmitter == "pc":
        mom = pc_statistic_moments(channel, geom, m_modes=m)
        return pc_error_probability(mom) <= pe_threshold
    return _exponent(transmitter, channel, geom, tol, dps) >= required_exponent(m, pe_threshold)


def _precision_for(m: int, pe_threshold: float):
    return HIGH_DPS if required_exponent(m, pe_threshold) < AUTO_PRECISION_FLOOR else None


def theta_grid(geom: SceneGeometry, points: int = SCAN_POINTS) -> np.ndarray:
    rayleigh = geom.lambda_s / geom.d
    return rayleigh * np.logspace(math.log10(THETA_LO_RAYLEIGH), math.log10(THETA_HI_RAYLEIGH), points)


def min_resolvable_angle(
    transmitter: str,
    channel: ChannelParams,
    geom_base: SceneGeometry,
    m: int,
    pe_threshold: float,
    tol: float = 1e-6,
) -> float | None:
    """Smallest ``theta`` whose bound meets ``pe_threshold`` with ``m`` mode pairs.

    A log-spaced scan over ``[1e-4, 2] lambda/D`` finds the first grid angle
    that meets the threshold; bisection between it and its predecessor
    refines the crossing to a relative 1e-4.  Returns ``None`` when no angle
    up to ``2 lambda/D`` suffices.  ``transmitter`` is ``coherent``, ``qi``
    or ``pc`` (phase-conjugate receiver, Gaussian approximation).
    """
    if not 0 < pe_threshold < 0.5:
        raise ConfigError("pe_threshold must lie in (0, 0.5)")
    if channel.kappa == 0:
        return None
    dps = _precision_for(m, pe_threshold)
    meets = lambda th: _meets(transmitter, channel, geom_base.with_theta(th), m, pe_threshold, tol, dps)  # noqa: E731
    grid = theta_grid(geom_base)
    hit = next((i for i, th in enumerate(grid) if meets(th)), None)
    if hit is None:
        return None
    if hit == 0:
        return float(grid[0])
    lo, hi = float(grid[hit - 1]), float(grid[hit])
    for _ in range(BISECT_MAX_ITER):
        if hi - lo <= BISECT_RTOL * hi:
            break
        mid = 0.5 * (lo + hi)
        if meets(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class ResolutionPoint:
    snr: float
    transmitter: str
    theta_min: float | None

    @property
    def resolvable(self) -> bool:
        return self.theta_min is not None


def _channel_at_snr(channel: ChannelParams, snr: float) -> ChannelParams:
    if channel.n_b <= 0 or channel.kappa <= 0:
        raise ConfigError("an SNR sweep needs kappa > 0 and n_b > 0")
    return channel.replace(n_s=snr * channel.n_b / channel.kappa)


def _resolution_task(args):
    transmitter, channel, geom, m, pe_threshold, tol, snr = args
    theta = min_resolvable_angle(transmitter, _channel_at_snr(channel, snr), geom, m, pe_threshold, tol)
    return ResolutionPoint(float(snr), transmitter, theta)


def resolution_curve(cfg: ExperimentConfig, transmitters: Iterable[str] = TRANSMITTERS, jobs: int = 1) -> list[ResolutionPoint]:
    """Minimum resolvable angle per SNR grid point and transmitter.

    SNR is varied through ``n_s`` at fixed ``kappa``, ``n_b`` and ``M``.
    Points are returned grid-major, transmitter-minor.
    """
    if cfg.sweep is None or cfg.sweep.variable != "snr":
        raise ConfigError("resolution_curve needs a sweep over 'snr'")
    transmitters = list(transmitters)
    if cfg.include_pc and "pc" not in transmitters:
        transmitters.append("pc")
    ch = cfg.channel
    tasks = [
        (t, ch, cfg.geometry, ch.m_modes, cfg.pe_threshold, cfg.tol, float(snr))
        for snr in cfg.sweep.values()
        for t in transmitters
    ]
    return _map(_resolution_task, tasks, jobs)


def _snr_bracket(channel: ChannelParams) -> tuple[float, float]:
    scale = channel.kappa / channel.n_b
    return N_S_RANGE[0] * scale, N_S_RANGE[1] * scale


def snr_for_angle(
    transmitter: str,
    channel: ChannelParams,
    geom: SceneGeometry,
    m: int,
    pe_threshold: float,
    tol: float = 1e-6,
    snr_range: tuple[float, float] | None = None,
    rtol: float = 1e-6,
) -> float | None:
    """SNR at which the bound at ``geom.theta`` exactly meets ``pe_threshold``.

    Uses bisection in log SNR; the exponent grows with ``n_s``.  The default
    bracket spans ``n_s`` from 1e-10 to 1e3.
    """
    dps = _precision_for(m, pe_threshold)

    def meets(snr):
        return _meets(transmitter, _channel_at_snr(channel, snr), geom, m, pe_threshold, tol, dps)

    lo, hi = snr_range or _snr_bracket(channel)
    if not meets(hi):
        return None
    if meets(lo):
        return lo
    while math.log(hi / lo) > rtol:
        mid = math.sqrt(lo * hi)
        if meets(mid):
            hi = mid
        else:
            lo = mid
    return hi


def lateral_shift_db(channel: ChannelParams, geom: SceneGeometry, m: int, pe_threshold: float, tol: float = 1e-6) -> float:
    """SNR advantage (dB) of the entangled transmitter at matched ``theta_min = geom.theta``."""
    cs = snr_for_angle("coherent", channel, geom, m, pe_threshold, tol)
    qi = snr_for_angle("qi", channel, geom, m, pe_threshold, tol)
    if cs is None or qi is None:
        raise NumericalError(f"angle {geom.theta:g} rad not resolvable within the SNR search range")
    return 10.0 * math.log10(cs / qi)


def peak_exponent(transmitter: str, channel: ChannelParams, geom_base: SceneGeometry, tol: float = 1e-6) -> tuple[float, float]:
    """Largest exponent over ``theta`` in ``(0, 2 lambda/D]`` and where it occurs."""
    grid = theta_grid(geom_base)
    values = [_exponent(transmitter, channel, geom_base.with_theta(th), tol, None) for th in grid]
    i = int(np.argmax(values))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    theta, neg = golden_section(lambda th: -_exponent(transmitter, channel, geom_base.with_theta(th), tol, None), lo, hi, 1e-6 * hi)
    if -neg < values[i]:
        return float(values[i]), float(grid[i])
    return float(-neg), float(theta)


def threshold_snr(
    transmitter: str,
    channel: ChannelParams,
    geom_base: SceneGeometry,
    m: int,
    pe_threshold: float,
    tol: float = 1e-6,
    snr_range: tuple[float, float] | None = None,
    rtol: float = 1e-3,
) -> float:
    """Lowest SNR at which some angle up to ``2 lambda/D`` becomes resolvable."""
    need = required_exponent(m, pe_threshold)
    lo, hi = snr_range or _snr_bracket(channel)

    def ok(snr):
        return peak_exponent(transmitter, _channel_at_snr(channel, snr), geom_base, tol)[0] >= need

    if not ok(hi):
        raise NumericalError("no angle is resolvable within the SNR search range")
    if ok(lo):
        return lo
    while math.log(hi / lo) > rtol:
        mid = math.sqrt(lo * hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ----------------------------------------------------------------------------
# CSV emission


def _fmt(value) -> str:
    if value is None:
        return "inf"
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    return str(value)


def write_csv(rows: list[dict], columns: Sequence[str], cfg: ExperimentConfig | None, out, title: str = "") -> None:
    """Write rows with a ``#``-prefixed provenance header recording the config."""
    if title:
        out.write(f"# {title}\n")
    if cfg is not None:
        out.write("# config: " + json.dumps(cfg.to_dict(), sort_keys=True, default=str) + "\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) if c in row else "" for c in columns])


def resolution_rows(points: list[ResolutionPoint], channel: ChannelParams) -> tuple[list[dict], list[str]]:
    """Pivot resolution points into one row per SNR."""
    rows: dict[float, dict] = {}
    transmitters: list[str] = []
    for pt in points:
        row = rows.setdefault(
            pt.snr, dict(snr=pt.snr, snr_db=10 * math.log10(pt.snr), n_s=pt.snr * channel.n_b / channel.kappa)
        )
        row[f"theta_min_{pt.transmitter}"] = pt.theta_min
        if pt.transmitter not in transmitters:
            transmitters.append(pt.transmitter)
    columns = ["snr", "snr_db", "n_s"] + [f"theta_min_{t}" for t in transmitters]
    return list(rows.values()), columns


def to_csv_string(rows, columns, cfg=None, title="") -> str:
    buf = io.StringIO()
    write_csv(rows, columns, cfg, buf, title)
    return buf.getvalue()


__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "M_SWEEP_DEFAULT",
    "RESOLUTION_DEFAULT",
    "ResolutionPoint",
    "SweepSpec",
    "lateral_shift_db",
    "m_sweep",
    "min_resolvable_angle",
    "peak_exponent",
    "required_exponent",
    "resolution_curve",
    "resolution_rows",
    "snr_for_angle",
    "threshold_snr",
    "transmitter_bound",
    "write_csv",
]
