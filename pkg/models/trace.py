from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional

import numpy as np
from pydantic import BaseModel

# Column order in exported traces
SIGNAL_ORDER = ("u", "delta_u", "d", "J", "z", "theta", "grad", "x")

TIME_COLUMN = "t_seconds"

# Header unit per signal; "input" is the plant input (map argument or
# Van der Pol feedback gain), "cost" the measured J
SIGNAL_UNITS = {
    "u": "input",
    "delta_u": "input",
    "d": "input",
    "J": "cost",
    "z": "1",
    "theta": "1",
    "grad": "cost/input",
    "x": "1",
}


def column_name(signal: str, index: int) -> str:
    """`u_1[input]`; signals without a known unit get no bracket."""
    unit = SIGNAL_UNITS.get(signal)
    return f"{signal}_{index}[{unit}]" if unit else f"{signal}_{index}"


def column_signal(column: str) -> str:
    return column.split("[", 1)[0].rsplit("_", 1)[0]


@dataclass
class SimulationTrace:
    """
    Per-sample record of a closed-loop run.

    Every appended row carries the same set of signals; a signal that is None
    for a controller (e.g. theta for ESC) is simply never recorded.
    """
    sample_time: float
    t: List[float] = field(default_factory=list)
    rows: Dict[str, List[np.ndarray]] = field(default_factory=dict)

    def append(self, t: float, **signals: Optional[np.ndarray]) -> None:
        self.t.append(float(t))
        for name, value in signals.items():
            if value is None:
                continue
            row = np.atleast_1d(np.asarray(value, dtype=float)).ravel().copy()
            self.rows.setdefault(name, []).append(row)

    def __len__(self) -> int:
        return len(self.t)

    def signal_names(self) -> List[str]:
        known = [name for name in SIGNAL_ORDER if name in self.rows]
        extra = sorted(name for name in self.rows if name not in SIGNAL_ORDER)
        return known + extra

    def signal(self, name: str) -> np.ndarray:
        """n x width array for one signal; (0, 0) when the signal was never recorded."""
        if name not in self.rows or not self.rows[name]:
            return np.zeros((0, 0))
        return np.vstack(self.rows[name])

    def columns(self) -> List[str]:
        header = [TIME_COLUMN]
        for name in self.signal_names():
            width = self.rows[name][0].size
            header.extend(column_name(name, i + 1) for i in range(width))
        return header

    def iter_rows(self) -> Iterator[List[float]]:
        names = self.signal_names()
        for k, t in enumerate(self.t):
            row = [t]
            for name in names:
                row.extend(self.rows[name][k].tolist())
            yield row


class SummaryReport(BaseModel):
    scenario: str
    controller: str
    steps: int
    sample_time: float
    terminal_cost: Optional[float] = None
    # Threshold label ("1e-01", "1e-02") -> first sample time with J below it
    time_below: Dict[str, Optional[float]] = {}
    final_window_u_peak_to_peak: Optional[float] = None
    final_window_max_dither: Optional[float] = None
    final_input: List[float] = []
    diverged_at_step: Optional[int] = None
    error: Optional[str] = None


@dataclass
class RunResult:
    trace: SimulationTrace
    summary: SummaryReport

    @property
    def diverged(self) -> bool:
        return self.summary.error is not None
