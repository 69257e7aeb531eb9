"""1-D preprocessing operators for FTIR and Raman spectra.

Operators are pure functions on :class:`~spectrafuse.core.Spectrum1D`; a
:class:`PipelineConfig` composes them in a fixed order (replicate handling,
region selection, baseline correction, scatter correction, smoothing,
derivative computation, intensity normalization).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, fields

import numpy as np
from scipy.linalg import solveh_banded
from scipy.signal import savgol_filter

from .core import SpectralAxis, Spectrum1D

EPS = 1e-12

REPLICATE_MODES = ("average", "keep_all")
REGIONS = (
    "full_650_4000",
    "fingerprint_900_1800",
    "amide_1500_1700",
    "lipid_2800_3000",
    "nucleic_1000_1250",
)
REGION_BOUNDS = {
    "full_650_4000": (650.0, 4000.0),
    "fingerprint_900_1800": (900.0, 1800.0),
    "amide_1500_1700": (1500.0, 1700.0),
    "lipid_2800_3000": (2800.0, 3000.0),
    "nucleic_1000_1250": (1000.0, 1250.0),
}
BASELINES = ("none", "polynomial", "als")
SCATTERS = ("none", "snv")
SMOOTHERS = ("none", "savitzky_golay", "moving_average")
DERIVATIVES = ("none", "first", "second", "first_and_second")
NORMALIZATIONS = ("none", "area", "l2", "max")

_FIELD_OPTIONS = {
    "replicate_mode": REPLICATE_MODES,
    "region": REGIONS,
    "baseline": BASELINES,
    "scatter": SCATTERS,
    "smoothing": SMOOTHERS,
    "derivative": DERIVATIVES,
    "normalization": NORMALIZATIONS,
}

# fixed operator defaults (the option grid varies the choice of operator,
# not its parameters)
ALS_LAM = 1e5
ALS_P = 0.01
ALS_N_ITER = 10
MODPOLY_DEGREE = 3
MODPOLY_MAX_ITER = 100
MODPOLY_TOL = 1e-6
SG_WINDOW = 11
SG_POLYORDER = 3
MA_WINDOW = 9


@dataclass(frozen=True)
class PipelineConfig:
    """Declarative choice of one option per preprocessing stage."""

    replicate_mode: str = "average"
    region: str = "full_650_4000"
    baseline: str = "none"
    scatter: str = "none"
    smoothing: str = "none"
    derivative: str = "none"
    normalization: str = "none"

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if value not in _FIELD_OPTIONS[f.name]:
                raise ValueError(f"{f.name}={value!r} not one of {_FIELD_OPTIONS[f.name]}")

    def to_dict(self) -> dict[str, str]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        return cls(**{f.name: d[f.name] for f in fields(cls)})


#: the pipeline used for FTIR unless a caller supplies its own
DEFAULT_FTIR_PIPELINE = PipelineConfig(
    replicate_mode="keep_all",
    region="full_650_4000",
    baseline="polynomial",
    scatter="snv",
    smoothing="savitzky_golay",
    derivative="second",
    normalization="none",
)


# ---------------------------------------------------------------------------
# elementary operators

def average_replicates(records: list[Spectrum1D]) -> Spectrum1D:
    """Pointwise arithmetic mean of replicate spectra sharing one axis."""
    if not records:
        raise ValueError("no replicates to average")
    axis = records[0].axis
    for rec in records[1:]:
        if not axis.same_grid(rec.axis):
            raise ValueError("replicates do not share one axis")
    stacked = np.stack([rec.intensity for rec in records])
    return Spectrum1D(axis=axis, intensity=stacked.mean(axis=0))


def select_region(s: Spectrum1D, lo: float, hi: float) -> Spectrum1D:
    """Keep samples with lo <= axis <= hi (inclusive)."""
    if lo >= hi:
        raise ValueError("region requires lo < hi")
    keep = (s.axis.values >= lo) & (s.axis.values <= hi)
    if not np.any(keep):
        raise ValueError(f"region [{lo}, {hi}] contains no axis points")
    return Spectrum1D(
        axis=SpectralAxis(s.axis.values[keep], unit=s.axis.unit),
        intensity=s.intensity[keep],
    )


def modpoly_baseline(
    y: np.ndarray,
    x: np.ndarray,
    degree: int = MODPOLY_DEGREE,
    max_iter: int = MODPOLY_MAX_ITER,
    tol: float = MODPOLY_TOL,
) -> np.ndarray:
    """Iteratively clipped polynomial baseline (modified polyfit scheme).

    Fits a least-squares polynomial, clips the working signal to the
    elementwise minimum of signal and fit, and refits until the fit changes
    by less than ``tol`` (max abs) or ``max_iter`` is reached.  Returns the
    baseline evaluated on ``x``.
    """
    work = np.asarray(y, dtype=np.float64).copy()
    prev_fit = None
    fit = work
    for _ in range(max_iter):
        poly = np.polynomial.Polynomial.fit(x, work, degree)
        fit = poly(x)
        if prev_fit is not None and np.max(np.abs(fit - prev_fit)) < tol:
            break
        prev_fit = fit
        work = np.minimum(work, fit)
    return fit


def baseline_polynomial(
    s: Spectrum1D,
    degree: int = MODPOLY_DEGREE,
    max_iter: int = MODPOLY_MAX_ITER,
    tol: float = MODPOLY_TOL,
) -> Spectrum1D:
    """Subtract an iteratively clipped polynomial baseline fit."""
    if degree < 1:
        raise ValueError("degree must be >= 1")
    if len(s) <= degree + 1:
        raise ValueError("spectrum too short for the requested degree")
    base = modpoly_baseline(s.intensity, s.axis.values, degree, max_iter, tol)
    return Spectrum1D(axis=s.axis, intensity=s.intensity - base)


def _second_diff_penalty_banded(n: int, lam: float) -> np.ndarray:
    """Upper banded form (3 x n) of lam * D2'D2 for the n-point second
    difference operator D2."""
    if n < 3:
        raise ValueError("penalized smoothing needs at least 3 points")
    ab = np.zeros((3, n))
    ab[0, 2:] = lam                      # second superdiagonal: 1, ..., 1
    off1 = np.full(n - 1, -4.0 * lam)    # first superdiagonal: -2, -4, ..., -4, -2
    off1[0] = off1[-1] = -2.0 * lam
    ab[1, 1:] = off1
    main = np.full(n, 6.0 * lam)         # main diagonal: 1, 5, 6, ..., 6, 5, 1
    main[0] = main[-1] = 1.0 * lam
    main[1] = main[-2] = (5.0 if n >= 4 else 4.0) * lam
    ab[2, :] = main
    return ab


def whittaker_solve(y: np.ndarray, w: np.ndarray, lam: float) -> np.ndarray:
    """Solve (W + lam * D2'D2) z = W y through the symmetric pentadiagonal
    system (Cholesky on the banded form)."""
    n = y.size
    ab = _second_diff_penalty_banded(n, lam)
    ab[2, :] += w
    return solveh_banded(ab, w * y, lower=False)


def als_baseline(
    y: np.ndarray,
    lam: float = ALS_LAM,
    p: float = ALS_P,
    n_iter: int = ALS_N_ITER,
) -> tuple[np.ndarray, np.ndarray]:
    """Asymmetric least squares baseline.

    Minimizes sum w_i (y_i - z_i)^2 + lam * sum (second difference of z)^2
    with weights reassigned each iteration as p where y > z and 1 - p
    elsewhere.  Returns ``(z, w)`` where ``w`` is the weight vector used for
    the final solve, so callers can verify stationarity of the solved system.
    """
    if lam <= 0:
        raise ValueError("lam must be > 0")
    if not 0 < p < 0.5:
        raise ValueError("p must be in (0, 0.5)")
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite input")
    if np.ptp(y) == 0.0:
        # constants lie in the penalty's null space: z = y is exact
        return y.copy(), np.ones_like(y)
    w = np.ones_like(y)
    w_used = w
    z = y
    for _ in range(n_iter):
        w_used = w
        z = whittaker_solve(y, w, lam)
        w = np.where(y > z, p, 1.0 - p)
    return z, w_used


def baseline_als(
    s: Spectrum1D,
    lam: float = ALS_LAM,
    p: float = ALS_P,
    n_iter: int = ALS_N_ITER,
) -> Spectrum1D:
    """Subtract an asymmetric-least-squares baseline estimate."""
    z, _ = als_baseline(s.intensity, lam=lam, p=p, n_iter=n_iter)
    return Spectrum1D(axis=s.axis, intensity=s.intensity - z)


def snv(s: Spectrum1D) -> Spectrum1D:
    """Standard normal variate: per-spectrum (y - mean) / population std."""
    y = s.intensity
    std = float(np.std(y))
    if std <= EPS:
        raise ValueError("SNV undefined for (near-)constant spectrum")
    return Spectrum1D(axis=s.axis, intensity=(y - np.mean(y)) / std)


def _uniform_step(axis: SpectralAxis) -> float:
    steps = np.diff(axis.values)
    mean = float(np.mean(steps))
    if np.max(np.abs(steps - mean)) / mean > 1e-6:
        raise ValueError("axis step is not uniform")
    return mean


def savitzky_golay(
    s: Spectrum1D,
    window: int = SG_WINDOW,
    polyorder: int = SG_POLYORDER,
    deriv: int = 0,
) -> Spectrum1D:
    """Savitzky-Golay smoothing / differentiation on a uniform grid.

    Derivatives are true axis derivatives (divided by step**deriv).  Edges
    are handled by fitting the boundary windows, preserving signal length.
    """
    if window % 2 == 0:
        raise ValueError("window must be odd")
    if window <= polyorder:
        raise ValueError("window must exceed polyorder")
    if deriv > polyorder:
        raise ValueError("deriv must not exceed polyorder")
    if window > len(s):
        raise ValueError("window larger than spectrum")
    step = _uniform_step(s.axis)
    out = savgol_filter(s.intensity, window, polyorder, deriv=deriv, delta=step, mode="interp")
    return Spectrum1D(axis=s.axis, intensity=out)


def moving_average(s: Spectrum1D, window: int = MA_WINDOW) -> Spectrum1D:
    """Centered moving average; windows shrink to the available samples at
    the edges so the length is preserved."""
    if window % 2 == 0:
        raise ValueError("window must be odd")
    n = len(s)
    if window > n:
        raise ValueError("window larger than spectrum")
    half = window // 2
    csum = np.concatenate(([0.0], np.cumsum(s.intensity)))
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half, n - 1)
    out = (csum[hi + 1] - csum[lo]) / (hi - lo + 1)
    return Spectrum1D(axis=s.axis, intensity=out)


def derivative_block(
    s: Spectrum1D,
    mode: str,
    window: int = SG_WINDOW,
    polyorder: int = SG_POLYORDER,
) -> np.ndarray:
    """Savitzky-Golay derivative features.

    ``first_and_second`` concatenates both derivative orders, doubling the
    feature count.
    """
    if mode == "first":
        return savitzky_golay(s, window, polyorder, deriv=1).intensity
    if mode == "second":
        return savitzky_golay(s, window, polyorder, deriv=2).intensity
    if mode == "first_and_second":
        d1 = savitzky_golay(s, window, polyorder, deriv=1).intensity
        d2 = savitzky_golay(s, window, polyorder, deriv=2).intensity
        return np.concatenate([d1, d2])
    raise ValueError(f"unknown derivative mode {mode!r}")


def normalize(v: np.ndarray, mode: str, dx: float = 1.0) -> np.ndarray:
    """Scale a feature vector by area (sum |v| * dx), l2 norm, or max |v|."""
    v = np.asarray(v, dtype=np.float64)
    if mode == "area":
        denom = float(np.sum(np.abs(v)) * dx)
    elif mode == "l2":
        denom = float(np.linalg.norm(v))
    elif mode == "max":
        denom = float(np.max(np.abs(v)))
    else:
        raise ValueError(f"unknown normalization {mode!r}")
    if denom <= EPS:
        raise ValueError(f"{mode} normalization denominator is zero")
    return v / denom


# ---------------------------------------------------------------------------
# pipeline composition

def _apply_single(cfg: PipelineConfig, s: Spectrum1D) -> np.ndarray:
    lo, hi = REGION_BOUNDS[cfg.region]
    s = select_region(s, lo, hi)
    if cfg.baseline == "polynomial":
        s = baseline_polynomial(s)
    elif cfg.baseline == "als":
        s = baseline_als(s)
    if cfg.scatter == "snv":
        s = snv(s)
    if cfg.smoothing == "savitzky_golay":
        s = savitzky_golay(s)
    elif cfg.smoothing == "moving_average":
        s = moving_average(s)
    if cfg.derivative == "none":
        v = s.intensity
        dx = s.axis.step
    else:
        v = derivative_block(s, cfg.derivative)
        # concatenated derivatives no longer align with the axis
        dx = s.axis.step if len(v) == len(s) else 1.0
    if cfg.normalization != "none":
        v = normalize(v, cfg.normalization, dx=dx)
    return np.asarray(v, dtype=np.float64)


def apply_pipeline(cfg: PipelineConfig, patient_records: list[Spectrum1D]) -> list[np.ndarray]:
    """Run a full pipeline on one patient's replicate spectra.

    Stage order: replicates, region, baseline, scatter, smoothing,
    derivative, normalization.  ``keep_all`` yields one feature vector per
    replicate; ``average`` yields one.
    """
    if not patient_records:
        raise ValueError("no records for patient")
    if cfg.replicate_mode == "average":
        spectra = [average_replicates(patient_records)]
    else:
        spectra = list(patient_records)
    return [_apply_single(cfg, s) for s in spectra]


def pipeline_feature_names(cfg: PipelineConfig, axis: SpectralAxis) -> list[str]:
    """Column names for ``apply_pipeline`` output on this acquisition axis:
    retained wavenumbers, prefixed by derivative order where applicable."""
    lo, hi = REGION_BOUNDS[cfg.region]
    keep = (axis.values >= lo) & (axis.values <= hi)
    wn = [f"{v:g}" for v in axis.values[keep]]
    if cfg.derivative == "none":
        return wn
    if cfg.derivative == "first":
        return [f"d1_{v}" for v in wn]
    if cfg.derivative == "second":
        return [f"d2_{v}" for v in wn]
    return [f"d1_{v}" for v in wn] + [f"d2_{v}" for v in wn]


def raman_pipeline(
    s: Spectrum1D,
    lo: float = 600.0,
    hi: float = 1800.0,
    lam: float = ALS_LAM,
    p: float = ALS_P,
    n_iter: int = ALS_N_ITER,
) -> np.ndarray:
    """Fixed Raman pipeline: 600-1800 cm-1 window, ALS baseline, SNV."""
    s = select_region(s, lo, hi)
    s = baseline_als(s, lam=lam, p=p, n_iter=n_iter)
    s = snv(s)
    return s.intensity


def enumerate_pipeline_axes() -> list[tuple[str, tuple[str, ...]]]:
    """Stage names and option tuples in canonical (outermost-first) order."""
    return [(f.name, _FIELD_OPTIONS[f.name]) for f in fields(PipelineConfig)]


def iter_pipeline_configs():
    """Yield every PipelineConfig in canonical nested order."""
    names = [f.name for f in fields(PipelineConfig)]
    option_lists = [_FIELD_OPTIONS[n] for n in names]
    for combo in itertools.product(*option_lists):
        yield PipelineConfig(**dict(zip(names, combo)))
