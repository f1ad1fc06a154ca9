"""
Result files and plots

Every CSV is written by pandas with '.' as decimal separator, 17 significant
digits and a fixed column order:

    prediction.csv  t, x[, y], rho[, std_err]
    result.csv      t, x[, y], rho_pred, rho_ref, abs_err[, std_err]
    errors.csv      snapshot, l2_rel
    telemetry.csv   step, the loss parts, total, lambda_min, lambda_max, seconds

Plots are self-contained SVG files drawn with matplotlib (Agg) and seaborn.
"""

import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Union

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import seaborn as sns  # noqa: E402
from scipy.interpolate import RegularGridInterpolator  # noqa: E402

from algorithms.exceptions import ConfigurationError  # noqa: E402
from algorithms.solvers.fields import SNAPSHOT_TOLERANCE, Grid, ReferenceField  # noqa: E402

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'
ERROR_COLUMNS = ['snapshot', 'l2_rel']
SPATIAL_NAMES = ('x', 'y')

PathLike = Union[str, Path]


# WRITERS

def write_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def _grid_columns(grid: Grid, t: float) -> Dict[str, np.ndarray]:
    centers = [c.reshape(-1) for c in grid.centers()]
    columns = {'t': np.full(centers[0].shape, t)}
    columns.update(zip(SPATIAL_NAMES, centers))
    return columns


def prediction_frame(grid: Grid, preds: Mapping[float, np.ndarray],
                     std_errors: Optional[Mapping[float, np.ndarray]] = None) -> pd.DataFrame:
    """Predicted rho on the cell centers of a grid."""
    frames = []
    for t, rho in preds.items():
        columns = _grid_columns(grid, t)
        columns['rho'] = np.asarray(rho, dtype=np.float64).reshape(-1)
        if std_errors is not None:
            columns['std_err'] = np.asarray(std_errors[t], dtype=np.float64).reshape(-1)
        frames.append(pd.DataFrame(columns))
    return pd.concat(frames, ignore_index=True)


def result_frame(ref: ReferenceField, preds: Mapping[float, np.ndarray],
                 std_errors: Optional[Mapping[float, np.ndarray]] = None) -> pd.DataFrame:
    """Prediction next to reference with the pointwise absolute error."""
    frames = []
    for t, rho in preds.items():
        columns = _grid_columns(ref.grid, t)
        predicted = np.asarray(rho, dtype=np.float64).reshape(-1)
        exact = ref.snapshot(t).reshape(-1)
        columns['rho_pred'] = predicted
        columns['rho_ref'] = exact
        columns['abs_err'] = np.abs(predicted - exact)
        if std_errors is not None:
            columns['std_err'] = np.asarray(std_errors[t], dtype=np.float64).reshape(-1)
        frames.append(pd.DataFrame(columns))
    return pd.concat(frames, ignore_index=True)


def errors_frame(table: Mapping[str, float]) -> pd.DataFrame:
    return pd.DataFrame({'snapshot': list(table.keys()), 'l2_rel': list(table.values())}, columns=ERROR_COLUMNS)


def read_errors(path: PathLike) -> Dict[str, float]:
    frame = pd.read_csv(path, dtype={'snapshot': str})
    return dict(zip(frame['snapshot'], frame['l2_rel'].astype(float)))


# READERS

def read_field_csv(path: PathLike, preferred: str = 'rho') -> pd.DataFrame:
    """
    Load (t, x[, y], rho) from a prediction, result or reference CSV.

    The value column is `preferred` when present, else the first of
    rho, rho_pred, rho_ref found.

    Raises:
        ConfigurationError: missing, empty or malformed file
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"CSV not found: {path}")
    try:
        frame = pd.read_csv(path)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as exc:
        raise ConfigurationError(f"Malformed CSV {path}: {exc}") from exc
    if frame.empty:
        raise ConfigurationError(f"CSV {path} holds no rows")

    candidates = [preferred] + [name for name in ('rho', 'rho_pred', 'rho_ref') if name != preferred]
    value = next((name for name in candidates if name in frame.columns), None)
    if value is None or 't' not in frame.columns or 'x' not in frame.columns:
        raise ConfigurationError(
            f"CSV {path} needs columns t, x[, y] and one of {', '.join(candidates)}; found {list(frame.columns)}"
        )
    names = ['t', 'x'] + (['y'] if 'y' in frame.columns else [])
    frame = frame[names + [value]].rename(columns={value: 'rho'})
    try:
        frame = frame.astype(np.float64)
    except ValueError as exc:
        raise ConfigurationError(f"CSV {path} has non-numeric entries: {exc}") from exc
    if not np.isfinite(frame.to_numpy()).all():
        raise ConfigurationError(f"CSV {path} has non-finite entries")
    return frame.sort_values(names, kind='mergesort').reset_index(drop=True)


def _snapshot(frame: pd.DataFrame, t: float) -> Optional[pd.DataFrame]:
    times = frame['t'].unique()
    k = int(np.argmin(np.abs(times - t)))
    if abs(times[k] - t) > SNAPSHOT_TOLERANCE:
        return None
    return frame[frame['t'] == times[k]]


# PLOTS

def _plot_lines(reference: pd.DataFrame, prediction: pd.DataFrame, times: List[float], label: str):
    fig, ax = plt.subplots(figsize=(8, 5))
    palette = sns.color_palette('deep', len(times))
    for color, t in zip(palette, times):
        ref = reference[reference['t'] == t]
        pred = _snapshot(prediction, t)
        ax.plot(ref['x'], ref['rho'], color=color, linewidth=1.8, label=f"Ref t={t:g}")
        # linear interpolation onto the reference cells
        rho = np.interp(ref['x'], pred['x'], pred['rho'])
        ax.plot(ref['x'], rho, color=color, linestyle='--', marker='o', markevery=max(1, len(ref) // 20),
                markersize=3, label=f"{label} t={t:g}")
    ax.set_xlabel('x')
    ax.set_ylabel('rho')
    ax.set_title(f"Ref v.s. {label}", fontweight='bold')
    ax.legend(fontsize=8, ncol=2)
    return fig


def _pivot(frame: pd.DataFrame) -> pd.DataFrame:
    return frame.pivot(index='y', columns='x', values='rho').sort_index(ascending=False)


def _plot_heatmaps(reference: pd.DataFrame, prediction: pd.DataFrame, times: List[float], label: str):
    fig, axes = plt.subplots(len(times), 2, figsize=(10, 4.2 * len(times)), squeeze=False)
    for row, t in zip(axes, times):
        ref = _pivot(reference[reference['t'] == t])
        pred = _pivot(_snapshot(prediction, t))
        if pred.shape != ref.shape or not (np.allclose(pred.index, ref.index) and np.allclose(pred.columns, ref.columns)):
            interpolate = RegularGridInterpolator(
                (pred.index.to_numpy()[::-1], pred.columns.to_numpy()), pred.to_numpy()[::-1],
                bounds_error=False, fill_value=None,
            )
            yy, xx = np.meshgrid(ref.index.to_numpy(), ref.columns.to_numpy(), indexing='ij')
            pred = pd.DataFrame(interpolate(np.stack([yy, xx], axis=-1)), index=ref.index, columns=ref.columns)
        vmin = min(ref.to_numpy().min(), pred.to_numpy().min())
        vmax = max(ref.to_numpy().max(), pred.to_numpy().max())
        for ax, data, name in zip(row, (ref, pred), ('Ref', label)):
            sns.heatmap(data, ax=ax, cmap='viridis', vmin=vmin, vmax=vmax, cbar=True,
                        xticklabels=False, yticklabels=False, cbar_kws={'label': 'rho'})
            ax.set_title(f"{name} t={t:g}")
            ax.set_xlabel('x')
            ax.set_ylabel('y')
    fig.suptitle(f"Ref v.s. {label}", fontweight='bold')
    return fig


def plot_comparison(prediction_path: PathLike, reference_path: PathLike, out_path: PathLike,
                    label: str = 'MA-APNNs') -> Path:
    """
    Overlay prediction and reference per snapshot: lines in 1D, heat maps with a color bar in 2D.

    Raises:
        ConfigurationError: malformed CSVs, mismatched dimensions or a snapshot missing from the prediction
    """
    reference = read_field_csv(reference_path, preferred='rho_ref')
    prediction = read_field_csv(prediction_path, preferred='rho_pred')
    two_d = 'y' in reference.columns
    if two_d != ('y' in prediction.columns):
        raise ConfigurationError("Prediction and reference CSVs have different spatial dimensions")
    times = sorted(float(t) for t in reference['t'].unique())
    missing = [t for t in times if _snapshot(prediction, t) is None]
    if missing:
        raise ConfigurationError(f"Prediction has no rows at t = {missing}")

    sns.set_theme(style='whitegrid')
    fig = _plot_heatmaps(reference, prediction, times, label) if two_d else _plot_lines(reference, prediction, times, label)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(out_path, format='svg', bbox_inches='tight', facecolor='white', edgecolor='none')
    plt.close(fig)
    logger.info(f"Wrote plot of {len(times)} snapshots to {out_path}")
    return out_path
