import io
import json
import sys
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np
import pandas as pd
from loguru import logger

from models.otoc_models import OtocSeries
from models.spectrum_models import QuasienergySpectrum
from models.sweep_models import SweepResult
from utils.error_handler import SchemaError

# 17 significant digits round-trip every double exactly
FLOAT_FORMAT = "%.17g"

SPECTRUM_COLUMNS = ["index", "re_mu", "im_mu", "re_eps", "im_eps"]
XI_COLUMNS = ["re_xi", "im_xi"]
OTOC_COLUMNS = ["t", "c_raw", "norm", "c_norm"]
SPACING_COLUMNS = ["spacing", "density"]
SWEEP_COLUMNS = ["K", "lambda", "clsr", "neg_cos", "alpha", "phase"]
TRIAL_COLUMNS = ["trial", "mean_r", "mean_neg_cos"]

PathLike = Optional[Union[str, Path]]


def write_text(text: str, path: PathLike = None) -> None:
    """Write to `path`, or to stdout when no path is given"""
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
    logger.info(f"Wrote {path}")


def frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_csv(frame: pd.DataFrame, path: PathLike = None) -> None:
    write_text(frame_to_csv(frame), path)


def to_json(payload: dict) -> str:
    # json uses repr() for floats, which round-trips doubles exactly
    return json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"


def write_json(payload: dict, path: PathLike = None) -> None:
    write_text(to_json(payload), path)


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def sidecar_path(path: Union[str, Path]) -> Path:
    """run.csv -> run.meta.json; never the data file itself, whatever its suffix"""
    path = Path(path)
    return path.with_name(f"{path.stem}.meta.json")


def read_csv(path: Union[str, Path], columns: Iterable[str]) -> pd.DataFrame:
    columns = list(columns)
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, ValueError, pd.errors.ParserError) as e:
        raise SchemaError(f"cannot read {path}: {e}", path=str(path))
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path} is missing columns {missing}; expected {columns}", path=str(path), missing=missing)
    return frame


def read_json(path: Union[str, Path]) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except (OSError, ValueError) as e:
        raise SchemaError(f"cannot read JSON from {path}: {e}", path=str(path))


def spectrum_frame(spectrum: QuasienergySpectrum) -> pd.DataFrame:
    return pd.DataFrame({
        "index": np.arange(spectrum.size),
        "re_mu": spectrum.mus.real,
        "im_mu": spectrum.mus.imag,
        "re_eps": spectrum.epsilons.real,
        "im_eps": spectrum.epsilons.imag,
    }, columns=SPECTRUM_COLUMNS)


def read_levels(path: Union[str, Path]) -> np.ndarray:
    """Complex levels from a spectrum CSV (quasienergies) or any CSV with re/im columns"""
    frame = pd.read_csv(path, float_precision="round_trip")
    if {"re_eps", "im_eps"} <= set(frame.columns):
        return frame["re_eps"].to_numpy() + 1j * frame["im_eps"].to_numpy()
    if {"re", "im"} <= set(frame.columns):
        return frame["re"].to_numpy() + 1j * frame["im"].to_numpy()
    if "level" in frame.columns:
        return frame["level"].to_numpy().astype(np.complex128)
    raise SchemaError(f"{path} has no level columns (re_eps/im_eps, re/im or level)", path=str(path))


def xi_frame(xis: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame({"re_xi": xis.real, "im_xi": xis.imag}, columns=XI_COLUMNS)


def otoc_frame(series: OtocSeries) -> pd.DataFrame:
    c_norm = series.c_norm if series.c_norm is not None else np.full(series.times.size, np.nan)
    return pd.DataFrame({
        "t": series.times,
        "c_raw": series.c_raw,
        "norm": series.norm,
        "c_norm": c_norm,
    }, columns=OTOC_COLUMNS)


def read_otoc(path: Union[str, Path]) -> OtocSeries:
    """OTOC series from a CSV table or from the `series` block of a JSON run document"""
    if str(path).endswith(".json"):
        frame = _otoc_json_frame(path)
    else:
        frame = read_csv(path, OTOC_COLUMNS)
    c_norm = frame["c_norm"].to_numpy()
    return OtocSeries(
        times=frame["t"].to_numpy(),
        c_raw=frame["c_raw"].to_numpy(),
        norm=frame["norm"].to_numpy(),
        c_norm=None if np.all(np.isnan(c_norm)) else c_norm,
    )


def _otoc_json_frame(path: Union[str, Path]) -> pd.DataFrame:
    document = read_json(path)
    series = document.get("series") if isinstance(document, dict) else None
    if not isinstance(series, dict):
        raise SchemaError(f"{path} is not an OTOC JSON document (no 'series' block)", path=str(path))
    missing = [c for c in OTOC_COLUMNS if c not in series]
    if missing:
        raise SchemaError(f"{path} series is missing columns {missing}; expected {OTOC_COLUMNS}", path=str(path), missing=missing)
    # null entries come back as NaN
    return pd.DataFrame({c: np.asarray(series[c], dtype=np.float64) for c in OTOC_COLUMNS}, columns=OTOC_COLUMNS)


def sweep_frame(result: SweepResult) -> pd.DataFrame:
    rows = [{
        "K": r.K,
        "lambda": r.lam,
        "clsr": r.clsr,
        "neg_cos": r.neg_cos,
        "alpha": r.alpha,
        "phase": r.phase_label.value if r.phase_label else "",
    } for r in result.records]
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def sweep_jsonl(result: SweepResult) -> str:
    buffer = io.StringIO()
    for record in result.records:
        buffer.write(json.dumps(record.payload(), sort_keys=True) + "\n")
    return buffer.getvalue()
