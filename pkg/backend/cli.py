"""Command-line front end for the PT-symmetric kicked rotor diagnostics.

Exit codes: 0 success, 1 usage error, 2 computation failure. Data goes to
stdout or --out; logs and errors go to stderr.
"""
import argparse
import difflib
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import ValidationError

from models.config_models import RunConfig, OutputFormat
from services.rotor_service import RotorService
from services.floquet_service import FloquetService
from services.spectral_service import SpectralService
from services.stats_service import StatsService
from services.rmt_service import RandomMatrixService
from services.otoc_service import OtocService
from services.sweep_service import SweepService
from services.plot_service import PlotService
from utils.config_loader import build_run_config, env_int, load_environment
from utils.error_handler import PTKRError, SchemaError, UsageError
from utils.logger_config import setup_logging
from utils import io_utils

COMMANDS = ("spectrum", "clsr", "rlsr", "unfold", "rmt", "otoc", "lyapunov", "sweep", "plot")
# Below this |Im eps| a spectrum is treated as real for unfolding
REAL_SPECTRUM_TOLERANCE = 1e-10


class ArgumentParser(argparse.ArgumentParser):
    """argparse that raises UsageError (with a suggestion for mistyped flags) instead of exiting"""

    def _known_options(self) -> List[str]:
        options = []
        for action in self._actions:
            options.extend(action.option_strings)
            if isinstance(action, argparse._SubParsersAction):
                for parser in action.choices.values():
                    options.extend(parser._known_options())
        return sorted(set(options))

    def error(self, message):
        suggestion = ""
        if "unrecognized arguments" in message:
            known = self._known_options()
            for token in message.split(":", 1)[-1].split():
                flag = token.split("=", 1)[0]
                close = difflib.get_close_matches(flag, known, n=1)
                if close:
                    suggestion = f" (did you mean {close[0]}?)"
                    break
        raise UsageError(f"{self.prog}: {message}{suggestion}")


class Services:
    """Wires the services the same way for every subcommand"""

    def __init__(self, eigen_backend: str = "lapack"):
        self.rotor = RotorService()
        self.floquet = FloquetService(self.rotor)
        self.spectral = SpectralService(eigen_backend)
        self.stats = StatsService()
        self.rmt = RandomMatrixService(self.spectral, self.stats)
        self.otoc = OtocService(self.floquet, self.rotor)
        self.sweep = SweepService(self.floquet, self.spectral, self.stats, self.otoc)
        self.plot = PlotService()


def _common_parser() -> argparse.ArgumentParser:
    common = ArgumentParser(add_help=False)
    physics = common.add_argument_group("rotor parameters")
    physics.add_argument("--K", type=float, help="kicking strength")
    physics.add_argument("--lambda", dest="lam", type=float, help="non-Hermiticity parameter")
    physics.add_argument("--hbar", type=float, help="effective Planck constant")
    physics.add_argument("--N", type=int, help="half basis size; dimension is 2N")
    physics.add_argument("--m", type=float, help="moment of inertia")
    physics.add_argument("--tau", type=float, help="kick period")
    physics.add_argument("--seed", type=int, help="RNG seed (jitter, ensembles, sweep base seed)")
    physics.add_argument("--jitter", type=float, help="mass jitter amplitude")
    packet = common.add_argument_group("wave packet / OTOC")
    packet.add_argument("--k0", type=int, help="packet centre momentum index")
    packet.add_argument("--sigma", type=float, help="packet width")
    packet.add_argument("--steps", type=int, help="number of kicks")
    packet.add_argument("--use-jitter", action="store_const", const=True, default=None,
                        help="apply the mass jitter in OTOC runs")
    ensemble = common.add_argument_group("random matrices")
    ensemble.add_argument("--ensemble", help="ginue, ginoe, aidagger, ptsymmetric, goe, poissonreal, poisson2d")
    ensemble.add_argument("--dim", type=int, help="matrix dimension")
    ensemble.add_argument("--trials", type=int, help="number of samples")
    run = common.add_argument_group("run")
    run.add_argument("--config", help="INI run configuration")
    run.add_argument("--out", help="output path (default stdout)")
    run.add_argument("--format", choices=[f.value for f in OutputFormat], help="output format")
    run.add_argument("--parallelism", type=int, help="worker processes")
    run.add_argument("--input", nargs="+", help="input file(s)")
    run.add_argument("--log-level", help="log level (default from LOG_LEVEL)")
    return common


def build_parser() -> ArgumentParser:
    common = _common_parser()
    parser = ArgumentParser(prog="ptkr", description="PT-symmetric kicked rotor: spectra, spacing ratios, OTOCs, phase diagrams")
    sub = parser.add_subparsers(dest="command", parser_class=ArgumentParser, metavar="{" + ",".join(COMMANDS) + "}")
    sub.required = True

    sub.add_parser("spectrum", parents=[common], help="complex quasienergy spectrum")
    sub.add_parser("clsr", parents=[common], help="complex level spacing ratio")
    sub.add_parser("rlsr", parents=[common], help="real level spacing ratio")
    unfold = sub.add_parser("unfold", parents=[common], help="unfolded nearest-neighbour spacings")
    unfold.add_argument("--mode", choices=["auto", "real", "complex"], default="auto")
    unfold.add_argument("--window", type=int, default=10, help="real unfolding radius in levels")
    unfold.add_argument("--neighbors", type=int, default=10, help="complex unfolding neighbour order n")
    sub.add_parser("rmt", parents=[common], help="random-matrix CLSR baselines")
    sub.add_parser("otoc", parents=[common], help="OTOC time series")
    lyapunov = sub.add_parser("lyapunov", parents=[common], help="fit alpha and the Lyapunov exponent to an OTOC file")
    lyapunov.add_argument("--alpha", type=float, help="use this alpha instead of the late-time fit")
    sweep = sub.add_parser("sweep", parents=[common], help="(K, lambda) phase diagram")
    sweep.add_argument("--k-values", help="comma-separated K axis")
    sweep.add_argument("--lambda-values", help="comma-separated lambda axis")
    sweep.add_argument("--checkpoint", help="append-only checkpoint file")
    sweep.add_argument("--resume", help="resume the sweep stored in this checkpoint")
    plot = sub.add_parser("plot", parents=[common], help="SVG figures from output files")
    plot.add_argument("--kind", choices=["heatmap", "otoc-lines", "histogram"], required=True)
    plot.add_argument("--field", default="clsr", help="heatmap field: clsr, alpha or neg_cos")
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Dict]:
    get = lambda name: getattr(args, name, None)
    overrides = {
        "rotor": {
            "K": get("K"), "lambda": get("lam"), "hbar_eff": get("hbar"), "half_size": get("N"),
            "m": get("m"), "tau": get("tau"), "seed": get("seed"), "jitter_amplitude": get("jitter"),
        },
        "wavepacket": {"k0": get("k0"), "sigma": get("sigma")},
        "ensemble": {"kind": get("ensemble"), "dim": get("dim"), "trials": get("trials"), "seed": get("seed")},
        "otoc": {"steps": get("steps"), "use_jitter": get("use_jitter")},
        "output": {"out": get("out"), "format": get("format")},
        "grid": {
            "k_values": get("k_values"), "lambda_values": get("lambda_values"),
            "base_seed": get("seed"), "parallelism": get("parallelism"), "checkpoint": get("checkpoint"),
        },
    }
    return {section: {k: v for k, v in values.items() if v is not None} for section, values in overrides.items()}


def _parallelism(config: RunConfig) -> int:
    return config.grid.parallelism or env_int("PTKR_PARALLELISM", 1)


def _metadata(config: RunConfig, **extra) -> dict:
    return {**extra, "config": config.echo()}


def _emit_json(payload: dict, config: RunConfig) -> None:
    io_utils.write_json(payload, config.output.out)


def _emit_table(frame: pd.DataFrame, metadata: dict, config: RunConfig) -> None:
    """CSV data to --out (with a <stem>.meta.json metadata sidecar) or stdout (metadata logged)"""
    out = config.output.out
    io_utils.write_csv(frame, out)
    if out:
        io_utils.write_json(metadata, io_utils.sidecar_path(out))
    else:
        logger.info(f"Run metadata: {io_utils.to_json({k: v for k, v in metadata.items() if k != 'config'}).strip()}")


def _levels(args, config: RunConfig, services: Services):
    """Levels from --input, or the quasienergies of the configured rotor; returns (levels, metadata)"""
    if args.input:
        path = args.input[0]
        if str(path).endswith(".json"):
            document = io_utils.read_json(path)
            try:
                spectrum = document["spectrum"]
                levels = np.asarray(spectrum["re_eps"]) + 1j * np.asarray(spectrum["im_eps"])
            except (KeyError, TypeError):
                raise SchemaError(f"{path} is not a spectrum JSON document", path=str(path))
        else:
            levels = io_utils.read_levels(path)
        return levels, {"input": str(path)}
    spectrum = _spectrum(config, services)
    return spectrum.epsilons, {
        "alpha": spectrum.alpha,
        "pt_broken": services.spectral.pt_broken(spectrum),
        "dimension": spectrum.size,
    }


def _spectrum(config: RunConfig, services: Services):
    params = config.rotor_params()
    jitter = services.rotor.sample_mass_jitter(params)
    operator = services.floquet.build_dense(params, jitter)
    return services.spectral.spectrum(operator)


def cmd_spectrum(args, config: RunConfig, services: Services) -> int:
    spectrum = _spectrum(config, services)
    metadata = _metadata(config, alpha=spectrum.alpha, pt_broken=services.spectral.pt_broken(spectrum), dimension=spectrum.size)
    frame = io_utils.spectrum_frame(spectrum)
    if config.output.format == OutputFormat.JSON:
        _emit_json({**metadata, "spectrum": frame.to_dict(orient="list")}, config)
    else:
        _emit_table(frame, metadata, config)
    return 0


def cmd_clsr(args, config: RunConfig, services: Services) -> int:
    levels, extra = _levels(args, config, services)
    ratios = services.stats.clsr(levels)
    metadata = _metadata(config, **ratios.summary(), **extra)
    if "alpha" in extra:
        metadata["phase_label"] = services.sweep.classify_phase(ratios.mean_r, extra["alpha"]).value
    if config.output.format == OutputFormat.CSV:
        _emit_table(io_utils.xi_frame(ratios.xis), metadata, config)
    else:
        _emit_json(metadata, config)
    return 0


def cmd_rlsr(args, config: RunConfig, services: Services) -> int:
    levels, extra = _levels(args, config, services)
    value = services.stats.rlsr(np.real(levels))
    metadata = _metadata(config, rlsr=value, count=int(np.size(levels)), **extra)
    if config.output.format == OutputFormat.CSV:
        _emit_table(pd.DataFrame({"rlsr": [value], "count": [int(np.size(levels))]}), metadata, config)
    else:
        _emit_json(metadata, config)
    return 0


def cmd_unfold(args, config: RunConfig, services: Services) -> int:
    levels, extra = _levels(args, config, services)
    mode = args.mode
    if mode == "auto":
        mode = "complex" if np.max(np.abs(np.imag(levels))) > REAL_SPECTRUM_TOLERANCE else "real"
    if mode == "real":
        unfolded = services.stats.unfold_real(np.real(levels), args.window)
    else:
        unfolded = services.stats.unfold_complex(levels, args.neighbors)
    spacings = unfolded.spacings
    densities = unfolded.densities if unfolded.densities is not None else np.full(spacings.size, np.nan)
    metadata = _metadata(
        config, mode=mode, count=int(spacings.size), mean_spacing=float(np.mean(spacings)),
        ks_goe=services.stats.ks_distance(spacings) if mode == "real" else None, **extra
    )
    frame = pd.DataFrame({"spacing": spacings, "density": densities}, columns=io_utils.SPACING_COLUMNS)
    if config.output.format == OutputFormat.JSON:
        _emit_json({**metadata, "spacings": frame.to_dict(orient="list")}, config)
    else:
        _emit_table(frame, metadata, config)
    return 0


def cmd_rmt(args, config: RunConfig, services: Services) -> int:
    spec = config.ensemble_spec()
    result = services.rmt.ensemble_clsr(spec, parallelism=_parallelism(config))
    metadata = _metadata(config, **result.summary())
    if config.output.format == OutputFormat.CSV:
        frame = pd.DataFrame({
            "trial": np.arange(result.trials),
            "mean_r": result.per_trial_r,
            "mean_neg_cos": result.per_trial_neg_cos,
        }, columns=io_utils.TRIAL_COLUMNS)
        _emit_table(frame, metadata, config)
    else:
        _emit_json(metadata, config)
    return 0


def cmd_otoc(args, config: RunConfig, services: Services) -> int:
    params = config.rotor_params()
    jitter = services.rotor.sample_mass_jitter(params) if config.otoc.use_jitter else None
    series = services.otoc.otoc_series(params, config.wavepacket_spec(), config.otoc.steps, jitter=jitter)
    series = services.otoc.analyze(series)
    metadata = _metadata(config, **series.fit_metadata(), norm_slope=_safe_norm_slope(services, series))
    frame = io_utils.otoc_frame(series)
    if config.output.format == OutputFormat.JSON:
        _emit_json({**metadata, "series": frame.to_dict(orient="list")}, config)
    else:
        _emit_table(frame, metadata, config)
    return 0


def _safe_norm_slope(services: Services, series) -> Optional[float]:
    try:
        return services.otoc.norm_slope(series)
    except PTKRError:
        return None


def cmd_lyapunov(args, config: RunConfig, services: Services) -> int:
    if not args.input:
        raise UsageError("lyapunov needs --input <otoc.csv|otoc.json>")
    series = io_utils.read_otoc(args.input[0])
    series = services.otoc.analyze(series, alpha=args.alpha, require_lyapunov=True)
    fit = services.otoc.lyapunov_fit(series)
    _emit_json(_metadata(
        config, input=str(args.input[0]), lambda_fit=fit.lyapunov, amplitude=fit.amplitude,
        fit_window=list(fit.window), alpha_fit=series.alpha_fit, alpha_clamped=series.alpha_clamped
    ), config)
    return 0


def cmd_sweep(args, config: RunConfig, services: Services) -> int:
    parallelism = _parallelism(config)
    if args.resume:
        result = services.sweep.resume(args.resume, parallelism=parallelism)
    else:
        grid_section = config.grid
        if not grid_section.k_values or not grid_section.lambda_values:
            raise UsageError("sweep needs K and lambda axes (--k-values/--lambda-values or [grid] in --config)")
        result = services.sweep.run_sweep(config.grid_spec(), parallelism=parallelism, checkpoint=grid_section.checkpoint)

    out = config.output.out
    if out:
        base = Path(out)
        io_utils.write_text(io_utils.sweep_jsonl(result), base.with_suffix(".jsonl"))
        io_utils.write_csv(io_utils.sweep_frame(result), base.with_suffix(".csv"))
        io_utils.write_json(_metadata(config, thresholds=result.thresholds, failed=result.failed,
                                      computed=len(result.computed)), base.with_suffix(".meta.json"))
    elif config.output.format == OutputFormat.CSV:
        io_utils.write_csv(io_utils.sweep_frame(result))
    else:
        io_utils.write_text(io_utils.sweep_jsonl(result))

    if result.failed:
        logger.error(f"Failed cells: {result.failed}")
        return 2
    return 0


def cmd_plot(args, config: RunConfig, services: Services) -> int:
    if not args.input:
        raise UsageError("plot needs --input")
    svg = services.plot.render(args.kind, args.input, field=args.field)
    services.plot.write(svg, config.output.out)
    return 0


HANDLERS = {
    "spectrum": cmd_spectrum,
    "clsr": cmd_clsr,
    "rlsr": cmd_rlsr,
    "unfold": cmd_unfold,
    "rmt": cmd_rmt,
    "otoc": cmd_otoc,
    "lyapunov": cmd_lyapunov,
    "sweep": cmd_sweep,
    "plot": cmd_plot,
}


def main(argv: Optional[List[str]] = None) -> int:
    load_environment()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"error: {e.message}\n")
        return 1
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    setup_logging(args.log_level)
    try:
        config = build_run_config(args.config, overrides_from_args(args))
        services = Services(os.getenv("PTKR_EIGEN_BACKEND", "lapack"))
        return HANDLERS[args.command](args, config, services)
    except (UsageError, ValidationError) as e:
        message = e.message if isinstance(e, UsageError) else str(e)
        logger.error(f"Usage error: {message}")
        return 1
    except PTKRError as e:
        logger.error(f"{args.command} failed ({e.code}): {e.message}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
