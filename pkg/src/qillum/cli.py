"""Command-line entry point: ``qillum {qcb,sweep-m,resolution,validate}``."""
from __future__ import annotations

import argparse
import logging
import sys
from contextlib import contextmanager

from .discrimination import NumericalError
from .fock_oracle import CutoffError
from .gaussian_states import ChannelParams, UnphysicalStateError
from .modes import DegenerateGeometryError, SceneGeometry
from .pc_receiver import pc_error_exponent, pc_error_probability, pc_statistic_moments
from .sweep import (
    M_SWEEP_DEFAULT,
    RESOLUTION_DEFAULT,
    ConfigError,
    ExperimentConfig,
    m_sweep,
    resolution_curve,
    resolution_rows,
    transmitter_bound,
    write_csv,
)
from .validation import validate, validate_point

log = logging.getLogger("qillum")

# oracle-regime operating point used when validate gets partial overrides
VALIDATE_DEFAULT = ExperimentConfig(channel=ChannelParams(0.05, 0.02, 0.2), geometry=SceneGeometry.from_rayleigh(0.5))

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VALIDATION = 0, 1, 2, 3


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config; flags override its values")
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument("--transmitter", choices=("coherent", "qi", "both"), default="both")
    common.add_argument("--pe-threshold", type=float, help="error-probability threshold")
    common.add_argument("--modes", type=int, help="number of signal-idler mode pairs M")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for grid points")
    common.add_argument("--kappa", type=float)
    common.add_argument("--n-s", type=float, dest="n_s")
    common.add_argument("--n-b", type=float, dest="n_b")
    common.add_argument("--theta-rayleigh", type=float, help="half-separation in units of lambda/D")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="qillum", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("qcb", parents=[common], help="Chernoff bounds and PC exponent at one operating point")
    sub.add_parser("sweep-m", parents=[common], help="error probability versus number of mode pairs")
    res = sub.add_parser("resolution", parents=[common], help="minimum resolvable angle versus SNR")
    res.add_argument("--include-pc", action="store_true", help="add the phase-conjugate receiver curve")
    sub.add_parser("validate", parents=[common], help="Gaussian versus truncated-Fock oracle suite")
    return parser


def _config(args, default: ExperimentConfig) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config, default) if args.config else default
    overrides: dict = {"channel": {}, "geometry": {}}
    for name in ("kappa", "n_s", "n_b"):
        if getattr(args, name) is not None:
            overrides["channel"][name] = getattr(args, name)
    if args.modes is not None:
        overrides["channel"]["m_modes"] = args.modes
    if args.theta_rayleigh is not None:
        overrides["geometry"]["theta_rayleigh"] = args.theta_rayleigh
    if args.pe_threshold is not None:
        overrides["pe_threshold"] = args.pe_threshold
    if args.out is not None:
        overrides["output"] = args.out
    if getattr(args, "include_pc", False):
        overrides["include_pc"] = True
    return ExperimentConfig.from_dict(overrides, cfg)


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _transmitters(choice: str) -> list[str]:
    return ["coherent", "qi"] if choice == "both" else [choice]


def cmd_qcb(args) -> int:
    cfg = _config(args, M_SWEEP_DEFAULT)
    ch, geom = cfg.channel, cfg.geometry
    rows = []
    for t in _transmitters(args.transmitter):
        b = transmitter_bound(t, ch, geom, cfg.tol)
        rows.append(dict(transmitter=t, s_star=b.s_star, q_s_star=b.q_s_star, exponent=b.exponent,
                         M=ch.m_modes, pe_bound=b.pe_bound))
    if args.transmitter in ("qi", "both"):
        rows.append(dict(transmitter="qi_pc", exponent=pc_error_exponent(ch, geom), M=ch.m_modes,
                         pe_bound=pc_error_probability(pc_statistic_moments(ch, geom))))
    with _output(cfg.output) as out:
        write_csv(rows, ["transmitter", "s_star", "q_s_star", "exponent", "M", "pe_bound"], cfg, out,
                  "qillum qcb")
    return EXIT_OK


def cmd_sweep_m(args) -> int:
    cfg = _config(args, M_SWEEP_DEFAULT)
    rows = m_sweep(cfg)
    with _output(cfg.output) as out:
        write_csv(rows, ["M", "Pe_CS_QCB", "Pe_QI_QCB", "Pe_PC"], cfg, out, "qillum sweep-m")
    return EXIT_OK


def cmd_resolution(args) -> int:
    cfg = _config(args, RESOLUTION_DEFAULT)
    points = resolution_curve(cfg, _transmitters(args.transmitter), jobs=args.jobs)
    rows, columns = resolution_rows(points, cfg.channel)
    with _output(cfg.output) as out:
        write_csv(rows, columns, cfg, out, "qillum resolution (theta_min in rad; inf = unresolvable)")
    return EXIT_OK


def cmd_validate(args) -> int:
    # without a config or parameter flags the built-in oracle instances are used
    custom = args.config or any(getattr(args, k) is not None for k in ("kappa", "n_s", "n_b", "theta_rayleigh"))
    cfg = _config(args, VALIDATE_DEFAULT)
    try:
        results = validate_point(cfg.channel, cfg.geometry) if custom else validate()
    except CutoffError as exc:
        raise ConfigError(f"parameters outside the truncated-Fock regime: {exc}") from exc
    rows = [vars(r) | {"passed": r.passed} for r in results]
    with _output(cfg.output) as out:
        write_csv(rows, ["check", "instance", "residual", "tolerance", "passed"], None, out, "qillum validate")
    failed = [r for r in results if not r.passed]
    if failed:
        log.error("%d of %d checks failed", len(failed), len(results))
        return EXIT_VALIDATION
    return EXIT_OK


COMMANDS = {"qcb": cmd_qcb, "sweep-m": cmd_sweep_m, "resolution": cmd_resolution, "validate": cmd_validate}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (NumericalError, UnphysicalStateError, DegenerateGeometryError, ArithmeticError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
