import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
from loguru import logger

from models.sweep_models import Diagnostic, GridSpec, PhaseLabel, SweepRecord, SweepResult
from services.floquet_service import FloquetService
from services.spectral_service import SpectralService, PT_THRESHOLD
from services.stats_service import StatsService
from services.otoc_service import OtocService
from utils.error_handler import CheckpointError, PTKRError

# Midpoint between the Poisson (0.50) and GOE (0.57) values of the CLSR
CHAOS_THRESHOLD = 0.535

CHECKPOINT_VERSION = 1


def stable_hash(base_seed: int, i: int, j: int) -> int:
    """Cell seed derived from (base_seed, i, j), identical across platforms and runs"""
    digest = hashlib.sha256(f"ptkr-cell:{base_seed}:{i}:{j}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def canonical_json(value) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), allow_nan=True)


def checksum(value) -> str:
    return hashlib.sha256(canonical_json(value).encode("utf-8")).hexdigest()


class SweepService:
    """(K, lambda) phase-diagram sweeps with an append-only, checksummed checkpoint"""

    def __init__(self,
                 floquet_service: Optional[FloquetService] = None,
                 spectral_service: Optional[SpectralService] = None,
                 stats_service: Optional[StatsService] = None,
                 otoc_service: Optional[OtocService] = None):
        self.floquet_service = floquet_service or FloquetService()
        self.spectral_service = spectral_service or SpectralService()
        self.stats_service = stats_service or StatsService()
        self.otoc_service = otoc_service or OtocService(self.floquet_service)

    @staticmethod
    def classify_phase(clsr: float, alpha: float) -> PhaseLabel:
        if alpha > PT_THRESHOLD:
            return PhaseLabel.PT_BROKEN_CHAOTIC
        if clsr >= CHAOS_THRESHOLD:
            return PhaseLabel.PT_CHAOTIC
        return PhaseLabel.PT_INTEGRABLE

    @staticmethod
    def thresholds() -> Dict[str, float]:
        return {"alpha_threshold": PT_THRESHOLD, "clsr_threshold": CHAOS_THRESHOLD}

    def compute_cell(self, grid: GridSpec, i: int, j: int) -> SweepRecord:
        """Compute one cell; failures are captured in the record rather than raised"""
        K = grid.k_values[i]
        lam = grid.lambda_values[j]
        seed = stable_hash(grid.base_seed, i, j)
        params = grid.base.model_copy(update={"K": K, "lam": lam, "seed": seed})
        started = time.perf_counter()
        values = {}
        try:
            jitter = self.floquet_service.rotor_service.sample_mass_jitter(params)
            operator = self.floquet_service.build_dense(params, jitter)
            spectrum = self.spectral_service.spectrum(operator)
            ratios = self.stats_service.clsr(spectrum.epsilons)
            alpha = spectrum.alpha
            values.update(
                clsr=ratios.mean_r,
                neg_cos=ratios.mean_neg_cos,
                alpha=alpha,
                pt_broken=self.spectral_service.pt_broken(spectrum),
                phase_label=self.classify_phase(ratios.mean_r, alpha),
            )
            if Diagnostic.RLSR in grid.diagnostics:
                values["rlsr"] = self.stats_service.rlsr(spectrum.epsilons.real)
            if Diagnostic.OTOC in grid.diagnostics:
                series = self.otoc_service.otoc_series(params, grid.wavepacket, grid.otoc_steps)
                series = self.otoc_service.analyze(series)
                values["lyapunov"] = series.lambda_fit
            status, error = "ok", None
        except PTKRError as e:
            logger.error(f"Cell ({i}, {j}) at K={K}, lambda={lam} failed: {e.message}")
            status, error = "failed", f"{e.code}: {e.message}"
        except Exception as e:
            logger.exception(f"Cell ({i}, {j}) at K={K}, lambda={lam} raised {type(e).__name__}")
            status, error = "failed", f"{type(e).__name__}: {e}"
        return SweepRecord(
            i=i, j=j, K=K, lam=lam, seed=seed, status=status, error=error,
            wall_time=time.perf_counter() - started, **values
        )

    # checkpoint file: header line, then one {"record", "checksum"} line per completed cell

    def _header(self, grid: GridSpec) -> dict:
        payload = {"version": CHECKPOINT_VERSION, "grid": grid.model_dump(mode="json", by_alias=True), "thresholds": self.thresholds()}
        return {"header": payload, "checksum": checksum(payload)}

    def _append(self, path: Path, line: dict) -> None:
        with open(path, "a", encoding="utf-8", newline="\n") as handle:
            handle.write(canonical_json(line) + "\n")
            handle.flush()
            os.fsync(handle.fileno())

    @staticmethod
    def _drop_incomplete_tail(path: Path) -> None:
        """Cut an interrupted final write so the next append starts on a fresh line"""
        with open(path, "rb+") as handle:
            data = handle.read()
            if data.endswith(b"\n"):
                return
            keep = data.rfind(b"\n") + 1
            handle.truncate(keep)
            handle.flush()
            os.fsync(handle.fileno())
        logger.info(f"Truncated checkpoint {path} to {keep} bytes before appending")

    def load_checkpoint(self, path) -> Tuple[GridSpec, Dict[Tuple[int, int], SweepRecord]]:
        path = Path(path)
        if not path.exists():
            raise CheckpointError(f"checkpoint {path} does not exist", path=str(path))
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        elif lines:
            # a final line without newline is an interrupted write
            logger.warning(f"Discarding incomplete trailing line in checkpoint {path}")
            lines.pop()
        if not lines:
            raise CheckpointError(f"checkpoint {path} has no header", path=str(path))

        try:
            head = json.loads(lines[0])
            header = head["header"]
        except (ValueError, KeyError, TypeError):
            raise CheckpointError(f"checkpoint {path} has an unreadable header", path=str(path), line=1)
        if checksum(header) != head.get("checksum") or header.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"checkpoint {path} header failed validation", path=str(path), line=1)
        grid = GridSpec(**header["grid"])

        records: Dict[Tuple[int, int], SweepRecord] = {}
        for number, line in enumerate(lines[1:], start=2):
            try:
                entry = json.loads(line)
                payload = entry["record"]
            except (ValueError, KeyError, TypeError):
                raise CheckpointError(f"checkpoint {path} line {number} is not a record", path=str(path), line=number)
            if checksum(payload) != entry.get("checksum"):
                raise CheckpointError(f"checkpoint {path} line {number} failed its checksum", path=str(path), line=number)
            record = SweepRecord(**payload)
            records[(record.i, record.j)] = record
        return grid, records

    def _start_checkpoint(self, path: Path, grid: GridSpec) -> Dict[Tuple[int, int], SweepRecord]:
        if path.exists() and path.stat().st_size > 0:
            stored, records = self.load_checkpoint(path)
            if checksum(stored.model_dump(mode="json", by_alias=True)) != checksum(grid.model_dump(mode="json", by_alias=True)):
                raise CheckpointError(f"checkpoint {path} belongs to a different grid", path=str(path))
            self._drop_incomplete_tail(path)
            return records
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(canonical_json(self._header(grid)) + "\n")
        return {}

    def run_sweep(self, grid: GridSpec, parallelism: int = 1, checkpoint: Optional[str] = None) -> SweepResult:
        path = Path(checkpoint) if checkpoint else None
        done = self._start_checkpoint(path, grid) if path else {}
        pending = [cell for cell in grid.cells() if cell not in done]
        logger.info(f"Sweep over {len(grid.cells())} cells: {len(done)} already done, {len(pending)} to compute, parallelism {parallelism}")

        computed: List[Tuple[int, int]] = []
        for record in self._execute(grid, pending, parallelism):
            done[(record.i, record.j)] = record
            computed.append((record.i, record.j))
            if path:
                payload = record.payload()
                self._append(path, {"record": payload, "checksum": checksum(payload)})
            logger.info(f"Cell ({record.i}, {record.j}) K={record.K}, lambda={record.lam}: {record.status} "
                        f"clsr={record.clsr}, alpha={record.alpha}, phase={record.phase_label.value if record.phase_label else None}")

        result = SweepResult(
            grid=grid,
            records=[done[cell] for cell in grid.cells() if cell in done],
            computed=sorted(computed),
            thresholds=self.thresholds(),
        )
        if result.failed:
            logger.warning(f"Sweep finished with {len(result.failed)} failed cells: {result.failed}")
        return result

    def _execute(self, grid: GridSpec, cells: List[Tuple[int, int]], parallelism: int) -> Iterable[SweepRecord]:
        if parallelism <= 1 or len(cells) <= 1:
            for i, j in cells:
                yield self.compute_cell(grid, i, j)
            return
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            futures = {pool.submit(self.compute_cell, grid, i, j): (i, j) for i, j in cells}
            # the main process is the only checkpoint writer
            for future in as_completed(futures):
                try:
                    yield future.result()
                except Exception as e:
                    # worker crashes and pickling failures never reach compute_cell's handler
                    i, j = futures[future]
                    logger.error(f"Worker for cell ({i}, {j}) failed: {type(e).__name__}: {e}")
                    yield self.failed_record(grid, i, j, f"{type(e).__name__}: {e}")

    @staticmethod
    def failed_record(grid: GridSpec, i: int, j: int, error: str) -> SweepRecord:
        return SweepRecord(
            i=i, j=j, K=grid.k_values[i], lam=grid.lambda_values[j],
            seed=stable_hash(grid.base_seed, i, j), status="failed", error=error
        )

    def resume(self, path, parallelism: int = 1) -> SweepResult:
        grid, _ = self.load_checkpoint(path)
        logger.info(f"Resuming sweep from {path}")
        return self.run_sweep(grid, parallelism=parallelism, checkpoint=path)

    @staticmethod
    def change_point(records: List[SweepRecord], lam: float = 0.0) -> Optional[float]:
        """First K along the lambda line at which the label turns PT-chaotic"""
        line = sorted((r for r in records if r.lam == lam and r.phase_label is not None), key=lambda r: r.K)
        for record in line:
            if record.phase_label == PhaseLabel.PT_CHAOTIC:
                return record.K
        return None

    @staticmethod
    def deterministic_view(result: SweepResult) -> List[dict]:
        """Records without wall_time, the only field allowed to differ between runs"""
        return [{k: v for k, v in record.payload().items() if k != "wall_time"} for record in result.records]

    @staticmethod
    def records_array(result: SweepResult, field: str) -> np.ndarray:
        shape = result.grid.shape
        grid = np.full(shape, np.nan)
        for record in result.records:
            value = getattr(record, field)
            if value is not None:
                grid[record.i, record.j] = float(value)
        return grid
