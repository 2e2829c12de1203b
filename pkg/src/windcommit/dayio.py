"""Day-series ingestion, CSV serialization, and synthetic data generation."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DomainError, IngestionError

log = logging.getLogger(__name__)

CSV_COLUMNS = ("step", "demand_actual", "demand_forecast", "wind_actual", "wind_forecast")

DEMAND_MIN_GW = 18.0
DEMAND_PEAK_GW = 38.0


@dataclass
class DayData:
    """One day of demand/wind actuals and forecasts, one value per step (GW)."""

    demand_actual: np.ndarray
    demand_forecast: np.ndarray
    wind_actual: np.ndarray
    wind_forecast: np.ndarray

    def __post_init__(self):
        arrays = []
        for name in ("demand_actual", "demand_forecast", "wind_actual", "wind_forecast"):
            arr = np.asarray(getattr(self, name), dtype=float)
            setattr(self, name, arr)
            arrays.append(arr)
        n = arrays[0].shape[0]
        if n < 1:
            raise DomainError("day data must have at least one step")
        if any(a.ndim != 1 or a.shape[0] != n for a in arrays):
            raise DomainError("day data series must be 1-D of equal length")
        if any(np.any(a < 0) for a in arrays):
            raise DomainError("day data values must be nonnegative")

    def __len__(self):
        return self.demand_actual.shape[0]

    def clamp_wind(self, wind_cap):
        """Warn about and clamp wind values above the configured cap."""
        for name in ("wind_actual", "wind_forecast"):
            arr = getattr(self, name)
            over = arr > wind_cap
            if np.any(over):
                log.warning("%d %s values exceed the %.3g GW wind cap; clamping",
                            int(np.sum(over)), name, wind_cap)
                setattr(self, name, np.minimum(arr, wind_cap))


def load_day_csv(path) -> DayData:
    """Parse the day CSV: header step,demand_actual,demand_forecast,
    wind_actual,wind_forecast; one row per step."""
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"data file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if header != list(CSV_COLUMNS):
            raise IngestionError(
                f"{path}: expected header {','.join(CSV_COLUMNS)}, got {','.join(header)}")
        columns = {name: [] for name in CSV_COLUMNS[1:]}
        for rownum, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(CSV_COLUMNS):
                raise IngestionError(f"{path}: row {rownum} has {len(row)} cells, "
                                     f"expected {len(CSV_COLUMNS)}")
            for name, cell in zip(CSV_COLUMNS[1:], row[1:]):
                try:
                    value = float(cell)
                except ValueError:
                    raise IngestionError(
                        f"{path}: row {rownum}, column {name}: "
                        f"non-numeric value {cell!r}") from None
                if math.isnan(value) or value < 0:
                    raise IngestionError(
                        f"{path}: row {rownum}, column {name}: "
                        f"negative or NaN value {cell!r}")
                columns[name].append(value)
    if not columns["demand_actual"]:
        raise IngestionError(f"{path}: no data rows")
    return DayData(**{k: np.array(v) for k, v in columns.items()})


def write_day_csv(data: DayData, path):
    """Write the day CSV with exact (repr) float rendering for round-trips."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for i in range(len(data)):
            writer.writerow([i, repr(float(data.demand_actual[i])),
                             repr(float(data.demand_forecast[i])),
                             repr(float(data.wind_actual[i])),
                             repr(float(data.wind_forecast[i]))])


def generate_synthetic_day(seed: int, steps: int = 48, phi: float = 1.2,
                           eps_c: float = 0.14, wind_cap: float = 20.0) -> DayData:
    """Deterministic synthetic day: sinusoidal demand between the 18 GW
    minimum and 38 GW peak, a seeded smooth wind forecast in [0, cap], and
    actual wind perturbed by seeded AR(1) noise.

    The AR error state is clamped to [-0.5, 0.5] so a persistence above 1
    cannot blow the series up over a long day.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(steps)
    mid = (DEMAND_MIN_GW + DEMAND_PEAK_GW) / 2.0
    amp = (DEMAND_PEAK_GW - DEMAND_MIN_GW) / 2.0
    demand = mid - amp * np.cos(2.0 * np.pi * t / steps)
    phase1, phase2 = rng.uniform(0, 2 * np.pi, size=2)
    base = (0.5 * wind_cap
            + 0.35 * wind_cap * np.sin(2.0 * np.pi * t / steps + phase1)
            + 0.12 * wind_cap * np.sin(4.0 * np.pi * t / steps + phase2))
    forecast = np.clip(base, 0.0, wind_cap)
    errors = np.zeros(steps)
    e = 0.0
    for i in range(steps):
        e = phi * e + eps_c * rng.standard_normal()
        e = min(0.5, max(-0.5, e))
        errors[i] = e
    actual = np.clip(forecast * (1.0 + errors), 0.0, wind_cap)
    return DayData(demand_actual=demand, demand_forecast=demand.copy(),
                   wind_actual=actual, wind_forecast=forecast)


def bundled_day_path() -> Path:
    """Path of the synthetic day CSV shipped with the package."""
    return Path(resources.files("windcommit") / "data" / "synthetic_day.csv")


def load_bundled_day() -> DayData:
    return load_day_csv(bundled_day_path())
