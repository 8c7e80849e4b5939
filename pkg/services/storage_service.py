import csv
import json
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from config.settings import settings
from core.errors import TraceWriteError
from models.trace import TIME_COLUMN, SimulationTrace, SummaryReport, column_signal
from utils.logger import get_logger

logger = get_logger(__name__)

ERROR_FOOTER = "# error: "

PathLike = Union[str, Path]


class StorageService:
    def __init__(self, precision: Optional[int] = None):
        self.precision = precision or settings.get_output_config()["precision"]

    def trace_path(self, directory: PathLike, scenario: str, controller: str) -> Path:
        return Path(directory) / f"{scenario}_{controller}.csv"

    def _format(self, value: float) -> str:
        return f"{value:.{self.precision}g}"

    def export_csv(self, trace: SimulationTrace, path: PathLike, error: Optional[str] = None) -> Path:
        """One row per sample; a diverged run ends with a `# error:` line."""
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w", newline="") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(trace.columns())
                for row in trace.iter_rows():
                    writer.writerow([self._format(value) for value in row])
                if error:
                    handle.write(f"{ERROR_FOOTER}{error}\n")
        except OSError as e:
            logger.error(f"Failed to write trace to {path}: {e}")
            raise TraceWriteError(str(e), str(path)) from e

        logger.info(f"Wrote {len(trace)} rows to {path}")
        return path

    def write_summaries(self, summaries: Iterable[SummaryReport], path: PathLike) -> Path:
        path = Path(path)
        payload = [summary.model_dump(mode="json") for summary in summaries]
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(payload, indent=2) + "\n")
        except OSError as e:
            logger.error(f"Failed to write summary to {path}: {e}")
            raise TraceWriteError(str(e), str(path)) from e
        logger.info(f"Wrote summary to {path}")
        return path

    def load_trace(self, path: PathLike, sample_time: float) -> SimulationTrace:
        """Rebuild a trace from an exported CSV, ignoring the error footer."""
        with Path(path).open(newline="") as handle:
            lines = [line for line in handle if not line.startswith("#")]
        reader = csv.reader(lines)
        header = next(reader)
        if not header or header[0] != TIME_COLUMN:
            raise ValueError(f"{path} does not start with a {TIME_COLUMN} column")

        names = [column_signal(column) for column in header[1:]]
        trace = SimulationTrace(sample_time=sample_time)
        for row in reader:
            values = np.asarray([float(cell) for cell in row])
            signals = {}
            for name in dict.fromkeys(names):
                signals[name] = values[1:][[i for i, n in enumerate(names) if n == name]]
            trace.append(values[0], **signals)
        return trace


storage_service = StorageService()
