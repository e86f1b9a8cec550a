"""Evaluation metrics over test UEs: misalignment and average throughput ratio."""

import numpy as np

from .selectors import BeamPairSet, DecoupledSets


def _flat_mask(selected, num_pairs: int, num_beamformers: int) -> np.ndarray:
    mask = np.zeros(num_pairs, dtype=bool)
    if isinstance(selected, BeamPairSet):
        mask[selected.flat_indices] = True
    elif isinstance(selected, DecoupledSets):
        flat = (selected.s_w[:, None] * num_beamformers + selected.s_f[None, :]).reshape(-1)
        mask[flat] = True
    else:
        mask[np.fromiter(selected, dtype=int)] = True
    return mask


def misalignment_probability(tr_matrix: np.ndarray, selected_sets, num_beamformers: int) -> float:
    """Fraction of rows whose exhaustive-argmax pair (lowest index on ties)
    is missing from the selected set."""
    tr_matrix = np.atleast_2d(np.asarray(tr_matrix, dtype=float))
    if len(selected_sets) != tr_matrix.shape[0]:
        raise ValueError("one selected set per row is required")
    misses = 0
    for row, sel in zip(tr_matrix, selected_sets):
        best = int(np.argmax(row))
        mask = _flat_mask(sel, tr_matrix.shape[1], num_beamformers)
        if not mask[best]:
            misses += 1
    return misses / tr_matrix.shape[0]


def avg_throughput_ratio(tr_matrix: np.ndarray, selected_sets, num_beamformers: int) -> float:
    """Mean over rows of the best in-set throughput ratio."""
    tr_matrix = np.atleast_2d(np.asarray(tr_matrix, dtype=float))
    if len(selected_sets) != tr_matrix.shape[0]:
        raise ValueError("one selected set per row is required")
    totals = 0.0
    for row, sel in zip(tr_matrix, selected_sets):
        mask = _flat_mask(sel, tr_matrix.shape[1], num_beamformers)
        totals += float(np.max(row[mask]))
    return totals / tr_matrix.shape[0]
