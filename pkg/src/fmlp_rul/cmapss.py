"""Readers and writers for C-MAPSS-format turbofan data files.

A trajectory file holds one observation per line: unit id, cycle, three
operating settings, and 21 sensor readings, whitespace separated. Fields
past column 26 (trailing blanks in some distributions) are ignored. A RUL
file holds one non-negative integer per line, aligned to test-unit order.
"""

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .errors import IntegrityError, ParseError

N_SETTINGS = 3
N_SENSORS = 21
N_COLUMNS = 2 + N_SETTINGS + N_SENSORS

SUBSET_IDS = ("FD001", "FD002", "FD003", "FD004")

# Per-subset sliding-window length M_d.
WINDOW_LENGTHS = {"FD001": 31, "FD002": 21, "FD003": 38, "FD004": 19}


@dataclass
class EngineTrajectory:
    """One engine's cycle-indexed record of settings and sensor readings.

    ``scaled`` marks that min-max normalization has been applied, so a
    second application can be rejected.
    """

    unit_id: int
    cycles: np.ndarray
    op_settings: np.ndarray
    sensors: np.ndarray
    scaled: bool = False

    def __post_init__(self):
        self.cycles = np.asarray(self.cycles, dtype=np.int64)
        self.op_settings = np.asarray(self.op_settings, dtype=np.float64)
        self.sensors = np.asarray(self.sensors, dtype=np.float64)
        n = len(self.cycles)
        if self.unit_id <= 0:
            raise IntegrityError(f"unit id must be positive, got {self.unit_id}")
        if n == 0:
            raise IntegrityError(f"unit {self.unit_id}: empty trajectory")
        if self.cycles[0] != 1 or (n > 1 and np.any(np.diff(self.cycles) != 1)):
            raise IntegrityError(
                f"unit {self.unit_id}: cycles must start at 1 and increase by 1"
            )
        if self.op_settings.shape != (n, N_SETTINGS):
            raise IntegrityError(
                f"unit {self.unit_id}: expected {n}x{N_SETTINGS} settings,"
                f" got {self.op_settings.shape}"
            )
        if self.sensors.shape != (n, N_SENSORS):
            raise IntegrityError(
                f"unit {self.unit_id}: expected {n}x{N_SENSORS} sensors,"
                f" got {self.sensors.shape}"
            )

    @property
    def n_cycles(self) -> int:
        return len(self.cycles)


@dataclass
class DataSubset:
    """A C-MAPSS subset: run-to-failure training units, truncated test units,
    the true test RULs, and the subset's window length."""

    subset_id: str
    train: list[EngineTrajectory]
    test: list[EngineTrajectory]
    test_rul: list[int]
    window_length: int = field(default=0)

    def __post_init__(self):
        if self.subset_id not in SUBSET_IDS:
            raise IntegrityError(f"unknown subset id {self.subset_id!r}")
        if not self.window_length:
            self.window_length = WINDOW_LENGTHS[self.subset_id]
        elif self.window_length != WINDOW_LENGTHS[self.subset_id]:
            raise IntegrityError(
                f"{self.subset_id} uses window length"
                f" {WINDOW_LENGTHS[self.subset_id]}, got {self.window_length}"
            )
        if len(self.test_rul) != len(self.test):
            raise IntegrityError(
                f"{self.subset_id}: {len(self.test_rul)} RUL values for"
                f" {len(self.test)} test units"
            )


def _as_lines(stream: TextIO | str | Iterable[str]) -> Iterable[str]:
    if isinstance(stream, str):
        return io.StringIO(stream)
    return stream


def parse_trajectory_file(stream: TextIO | str | Iterable[str]) -> list[EngineTrajectory]:
    """Parse a train/test trajectory file into one trajectory per unit.

    Units appear in first-appearance order. Raises ParseError for a
    malformed line and IntegrityError for non-contiguous cycles.
    """
    rows_by_unit: dict[int, list[list[float]]] = {}
    for line_no, line in enumerate(_as_lines(stream), start=1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) < N_COLUMNS:
            raise ParseError(
                line_no, f"expected at least {N_COLUMNS} fields, got {len(parts)}"
            )
        try:
            unit = int(parts[0])
            cycle = int(parts[1])
            values = [float(x) for x in parts[2:N_COLUMNS]]
        except ValueError as exc:
            raise ParseError(line_no, f"malformed numeric field ({exc})") from None
        rows_by_unit.setdefault(unit, []).append([float(cycle)] + values)

    trajectories = []
    for unit, rows in rows_by_unit.items():
        data = np.array(rows, dtype=np.float64)
        trajectories.append(
            EngineTrajectory(
                unit_id=unit,
                cycles=data[:, 0].astype(np.int64),
                op_settings=data[:, 1 : 1 + N_SETTINGS],
                sensors=data[:, 1 + N_SETTINGS :],
            )
        )
    return trajectories


def parse_rul_file(stream: TextIO | str | Iterable[str]) -> list[int]:
    """Parse a RUL file: one non-negative integer per non-empty line."""
    values = []
    for line_no, line in enumerate(_as_lines(stream), start=1):
        text = line.strip()
        if not text:
            continue
        try:
            value = int(text)
        except ValueError:
            raise ParseError(line_no, f"expected an integer, got {text!r}") from None
        if value < 0:
            raise ParseError(line_no, f"RUL must be non-negative, got {value}")
        values.append(value)
    return values


def format_trajectories(trajectories: list[EngineTrajectory]) -> str:
    """Render trajectories back to the line format (round-trips exactly)."""
    lines = []
    for traj in trajectories:
        for i in range(traj.n_cycles):
            fields = [str(traj.unit_id), str(int(traj.cycles[i]))]
            fields += [repr(float(v)) for v in traj.op_settings[i]]
            fields += [repr(float(v)) for v in traj.sensors[i]]
            lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def load_subset(root_dir: str | Path, subset_id: str) -> DataSubset:
    """Load train_FD00x.txt, test_FD00x.txt, and RUL_FD00x.txt from a directory."""
    if subset_id not in SUBSET_IDS:
        raise IntegrityError(f"unknown subset id {subset_id!r}")
    root = Path(root_dir)
    paths = {
        "train": root / f"train_{subset_id}.txt",
        "test": root / f"test_{subset_id}.txt",
        "rul": root / f"RUL_{subset_id}.txt",
    }
    for path in paths.values():
        if not path.is_file():
            raise FileNotFoundError(f"missing data file: {path}")

    with open(paths["train"], encoding="utf-8") as fh:
        train = parse_trajectory_file(fh)
    with open(paths["test"], encoding="utf-8") as fh:
        test = parse_trajectory_file(fh)
    with open(paths["rul"], encoding="utf-8") as fh:
        test_rul = parse_rul_file(fh)

    return DataSubset(subset_id=subset_id, train=train, test=test, test_rul=test_rul)
