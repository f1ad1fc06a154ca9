"""L2 relative errors of rho predictions against a reference field."""

from typing import Dict, Mapping

import numpy as np

from algorithms.solvers.fields import ReferenceField


def _prediction(pred, ref: ReferenceField) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.float64)
    shape = tuple(ref.grid.shape)
    if pred.size != int(np.prod(shape)):
        raise ValueError(f"Prediction has {pred.size} values, the reference grid has {shape}")
    return pred.reshape(shape)


def l2_relative_error(pred, ref: ReferenceField, t: float) -> float:
    """
    ||pred - ref|| / ||ref|| over the grid at snapshot t, cell-volume weighted.

    pred holds rho at the cell centers (flattened or shaped like the grid).

    Raises:
        ValueError: the reference vanishes at t
        MissingReferenceError: no snapshot at t
    """
    exact = ref.snapshot(t)
    weight = ref.grid.cell_volume
    norm = np.sqrt(weight * np.sum(exact ** 2))
    if norm == 0.0:
        raise ValueError(f"Reference '{ref.problem_id}' vanishes at t={t}; relative error undefined")
    return float(np.sqrt(weight * np.sum((_prediction(pred, ref) - exact) ** 2)) / norm)


def space_time_l2_relative_error(preds: Mapping[float, np.ndarray], ref: ReferenceField) -> float:
    """The same ratio with both norms summed over every snapshot in preds."""
    weight = ref.grid.cell_volume
    error = 0.0
    norm = 0.0
    for t, pred in preds.items():
        exact = ref.snapshot(t)
        error += weight * np.sum((_prediction(pred, ref) - exact) ** 2)
        norm += weight * np.sum(exact ** 2)
    if norm == 0.0:
        raise ValueError(f"Reference '{ref.problem_id}' vanishes on every snapshot; relative error undefined")
    return float(np.sqrt(error / norm))


def error_table(preds: Mapping[float, np.ndarray], ref: ReferenceField) -> Dict[str, float]:
    """Per-snapshot errors keyed by the time as text, plus 'space_time'."""
    table = {f"{t:g}": l2_relative_error(pred, ref, t) for t, pred in preds.items()}
    table['space_time'] = space_time_l2_relative_error(preds, ref)
    return table
