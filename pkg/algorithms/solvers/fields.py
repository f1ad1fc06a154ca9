"""
Reference grids and tabulated density fields

A ReferenceField holds rho on the cell centers of a uniform grid at a list
of snapshot times. On disk it is a long-format CSV with columns
t, x[, y], rho plus a JSON sidecar (same stem, suffix .meta.json) carrying
the problem id, the scheme and the grid.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd

from algorithms.exceptions import MissingReferenceError

logger = logging.getLogger(__name__)

SNAPSHOT_TOLERANCE = 1e-9
METADATA_SUFFIX = '.meta.json'


# GRIDS

@dataclass(frozen=True)
class Grid1D:
    cells: int
    lo: float
    hi: float
    dt: float
    final_time: float
    start_time: float = 0.0

    def __post_init__(self):
        if self.cells <= 0:
            raise ValueError(f"Grid needs a positive cell count, got {self.cells}")
        if not self.hi > self.lo:
            raise ValueError(f"Degenerate grid interval ({self.lo}, {self.hi})")
        if not self.dt > 0.0:
            raise ValueError(f"Time step must be positive, got {self.dt}")
        if not self.final_time >= self.start_time:
            raise ValueError(f"Final time {self.final_time} precedes start time {self.start_time}")

    @classmethod
    def for_problem(cls, problem, cells: int = 400, steps: int = 2000) -> "Grid1D":
        lo, hi = problem.domain[0]
        t0, t1 = problem.time_interval
        return cls(cells, lo, hi, (t1 - t0) / steps, t1, t0)

    @property
    def dimension(self) -> int:
        return 1

    @property
    def dx(self) -> float:
        return (self.hi - self.lo) / self.cells

    @property
    def shape(self) -> Tuple[int]:
        return (self.cells,)

    @property
    def cell_volume(self) -> float:
        return self.dx

    @property
    def n_steps(self) -> int:
        return int(round((self.final_time - self.start_time) / self.dt))

    def centers(self) -> Tuple[np.ndarray]:
        return (self.lo + (np.arange(self.cells) + 0.5) * self.dx,)

    def to_dict(self) -> Dict:
        return {'cells': [self.cells], 'domain': [[self.lo, self.hi]], 'dt': self.dt,
                'final_time': self.final_time, 'start_time': self.start_time}


@dataclass(frozen=True)
class Grid2D:
    cells: Tuple[int, int]
    domain: Tuple[Tuple[float, float], Tuple[float, float]]
    dt: float
    final_time: float
    start_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'cells', tuple(int(c) for c in self.cells))
        object.__setattr__(self, 'domain', tuple((float(lo), float(hi)) for lo, hi in self.domain))
        if len(self.cells) != 2 or min(self.cells) <= 0:
            raise ValueError(f"Grid needs two positive cell counts, got {self.cells}")
        if any(not hi > lo for lo, hi in self.domain):
            raise ValueError(f"Degenerate grid box {self.domain}")
        if not self.dt > 0.0:
            raise ValueError(f"Time step must be positive, got {self.dt}")
        if not self.final_time >= self.start_time:
            raise ValueError(f"Final time {self.final_time} precedes start time {self.start_time}")

    @classmethod
    def for_problem(cls, problem, cells: int = 128, steps: int = 400) -> "Grid2D":
        t0, t1 = problem.time_interval
        return cls((cells, cells), problem.domain, (t1 - t0) / steps, t1, t0)

    @property
    def dimension(self) -> int:
        return 2

    @property
    def spacing(self) -> Tuple[float, float]:
        return tuple((hi - lo) / n for (lo, hi), n in zip(self.domain, self.cells))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.cells

    @property
    def cell_volume(self) -> float:
        dx, dy = self.spacing
        return dx * dy

    @property
    def n_steps(self) -> int:
        return int(round((self.final_time - self.start_time) / self.dt))

    def centers(self) -> Tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinates, each shaped (nx, ny) with x along axis 0."""
        axes = [lo + (np.arange(n) + 0.5) * h for (lo, _), n, h in zip(self.domain, self.cells, self.spacing)]
        return tuple(np.meshgrid(*axes, indexing='ij'))

    def to_dict(self) -> Dict:
        return {'cells': list(self.cells), 'domain': [list(b) for b in self.domain], 'dt': self.dt,
                'final_time': self.final_time, 'start_time': self.start_time}


Grid = Union[Grid1D, Grid2D]


def grid_from_dict(data: Dict) -> Grid:
    cells, domain = data['cells'], data['domain']
    if len(cells) == 1:
        (lo, hi), = domain
        return Grid1D(int(cells[0]), lo, hi, data['dt'], data['final_time'], data.get('start_time', 0.0))
    return Grid2D(tuple(cells), tuple(tuple(b) for b in domain), data['dt'], data['final_time'],
                  data.get('start_time', 0.0))


def snap_times(grid: Grid, times) -> Tuple[np.ndarray, np.ndarray]:
    """
    Map requested times to the nearest step of the time grid.

    Returns (step indices, snapped times). A time that moves by more than
    SNAPSHOT_TOLERANCE is logged as a warning.
    """
    requested = np.asarray(times, dtype=np.float64).reshape(-1)
    steps = np.clip(np.rint((requested - grid.start_time) / grid.dt), 0, grid.n_steps).astype(int)
    snapped = grid.start_time + steps * grid.dt
    for wanted, got in zip(requested, snapped):
        if abs(wanted - got) > SNAPSHOT_TOLERANCE:
            logger.warning(f"Snapshot t={wanted} snapped to the time grid at t={got}")
    return steps, snapped


# REFERENCE FIELD

@dataclass(eq=False)
class ReferenceField:
    """rho on the cell centers of `grid`: values shaped (K,) + grid.shape for K snapshot times."""
    times: np.ndarray
    values: np.ndarray
    grid: Grid
    problem_id: str
    scheme: str
    metadata: Dict = field(default_factory=dict)
    intensity: Optional[np.ndarray] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64).reshape(-1)
        self.values = np.asarray(self.values, dtype=np.float64)
        expected = (len(self.times),) + tuple(self.grid.shape)
        if self.values.shape != expected:
            raise ValueError(f"Reference values have shape {self.values.shape}, grid needs {expected}")
        if not np.isfinite(self.values).all():
            raise ValueError(f"Reference '{self.problem_id}' ({self.scheme}) contains non-finite values")

    @property
    def dimension(self) -> int:
        return self.grid.dimension

    def index_of(self, t: float, tolerance: float = SNAPSHOT_TOLERANCE) -> int:
        if len(self.times) == 0:
            raise MissingReferenceError(f"Reference '{self.problem_id}' holds no snapshots")
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > tolerance:
            raise MissingReferenceError(
                f"Reference '{self.problem_id}' has no snapshot at t={t}; available: {self.times.tolist()}"
            )
        return k

    def snapshot(self, t: float, tolerance: float = SNAPSHOT_TOLERANCE) -> np.ndarray:
        return self.values[self.index_of(t, tolerance)]

    def points(self, t: float) -> np.ndarray:
        """Rows (t, x[, y]) at the cell centers, in the flattening order of a snapshot."""
        centers = [c.reshape(-1) for c in self.grid.centers()]
        return np.column_stack([np.full_like(centers[0], t)] + centers)

    def to_frame(self) -> pd.DataFrame:
        centers = [c.reshape(-1) for c in self.grid.centers()]
        names = ['x', 'y'][:self.dimension]
        frames = []
        for t, rho in zip(self.times, self.values):
            columns = {'t': np.full(centers[0].shape, t)}
            columns.update(dict(zip(names, centers)))
            columns['rho'] = rho.reshape(-1)
            frames.append(pd.DataFrame(columns))
        if not frames:
            return pd.DataFrame(columns=['t'] + names + ['rho'])
        return pd.concat(frames, ignore_index=True)

    def describe(self) -> Dict:
        return {'problem_id': self.problem_id, 'scheme': self.scheme, 'grid': self.grid.to_dict(),
                'times': self.times.tolist(), **self.metadata}

    def save(self, path) -> Path:
        """Write the CSV and its metadata sidecar; returns the CSV path."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format='%.17g')
        sidecar = metadata_path(path)
        sidecar.write_text(json.dumps(self.describe(), indent=2))
        logger.info(f"Wrote reference '{self.problem_id}' ({self.scheme}, {len(self.times)} snapshots) to {path}")
        return path

    @classmethod
    def load(cls, path) -> "ReferenceField":
        """
        Read a reference written by save().

        Raises:
            MissingReferenceError: the CSV or its sidecar does not exist
        """
        path = Path(path)
        sidecar = metadata_path(path)
        if not path.exists() or not sidecar.exists():
            raise MissingReferenceError(f"No reference at {path} (with sidecar {sidecar.name})")
        meta = json.loads(sidecar.read_text())
        grid = grid_from_dict(meta.pop('grid'))
        problem_id = meta.pop('problem_id')
        scheme = meta.pop('scheme')
        meta.pop('times', None)
        frame = pd.read_csv(path)
        sort_by = ['t', 'x', 'y'][:1 + grid.dimension]
        frame = frame.sort_values(sort_by, kind='mergesort')
        times = np.sort(frame['t'].unique())
        values = frame['rho'].to_numpy().reshape((len(times),) + tuple(grid.shape))
        return cls(times, values, grid, problem_id, scheme, meta)


def metadata_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + METADATA_SUFFIX)
