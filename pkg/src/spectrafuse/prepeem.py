"""Excitation-emission matrix preprocessing and flattening.

Fixed pipeline: blank subtraction, physical-validity masking (emission below
excitation), Rayleigh scatter removal around the first- and second-order
diagonals, then row-major flattening to a feature vector.  Masked cells are
kept as literal zeros so the feature schema stays constant across samples.
"""

from __future__ import annotations

import numpy as np

from .core import EEMatrix

RAYLEIGH_HALF_WINDOW = 25.0


def subtract_blank(sample: EEMatrix, blank: EEMatrix) -> EEMatrix:
    """Elementwise sample minus blank; axes must match, mask is unchanged."""
    if not (sample.ex_axis.same_grid(blank.ex_axis) and sample.em_axis.same_grid(blank.em_axis)):
        raise ValueError("sample and blank axes differ")
    return EEMatrix(
        ex_axis=sample.ex_axis,
        em_axis=sample.em_axis,
        grid=sample.grid - blank.grid,
        mask=sample.mask,
    )


def _masked(m: EEMatrix, extra: np.ndarray) -> EEMatrix:
    mask = m.mask | extra
    grid = np.where(mask, 0.0, m.grid)
    return EEMatrix(ex_axis=m.ex_axis, em_axis=m.em_axis, grid=grid, mask=mask)


def physical_mask(ex_axis, em_axis) -> np.ndarray:
    """True where emission wavelength is strictly below excitation."""
    ex = ex_axis.values[:, None]
    em = em_axis.values[None, :]
    return em < ex


def rayleigh_mask(ex_axis, em_axis, half_window: float = RAYLEIGH_HALF_WINDOW) -> np.ndarray:
    """True within ``half_window`` nm (inclusive) of either scatter diagonal
    (emission near excitation, or near twice the excitation)."""
    ex = ex_axis.values[:, None]
    em = em_axis.values[None, :]
    return (np.abs(em - ex) <= half_window) | (np.abs(em - 2.0 * ex) <= half_window)


def mask_physical(m: EEMatrix) -> EEMatrix:
    """Zero out and flag physically impossible cells (emission < excitation)."""
    return _masked(m, physical_mask(m.ex_axis, m.em_axis))


def remove_rayleigh(m: EEMatrix, half_window: float = RAYLEIGH_HALF_WINDOW) -> EEMatrix:
    """Zero out and flag scatter diagonals; no interpolation into the gaps."""
    if half_window <= 0:
        raise ValueError("half_window must be > 0")
    return _masked(m, rayleigh_mask(m.ex_axis, m.em_axis, half_window))


def feature_names(m: EEMatrix) -> list[str]:
    """Stable ``(ex,em)`` name per flattened cell, row-major."""
    return [
        f"({ex:g},{em:g})"
        for ex in m.ex_axis.values
        for em in m.em_axis.values
    ]


def flatten(m: EEMatrix) -> np.ndarray:
    """Row-major (excitation-major) flattening; masked cells emit 0."""
    return np.where(m.mask, 0.0, m.grid).ravel()


def eem_pipeline(
    sample: EEMatrix,
    blank: EEMatrix,
    half_window: float = RAYLEIGH_HALF_WINDOW,
) -> np.ndarray:
    """Blank subtraction, physical masking, Rayleigh removal, flatten."""
    m = subtract_blank(sample, blank)
    m = mask_physical(m)
    m = remove_rayleigh(m, half_window)
    return flatten(m)
