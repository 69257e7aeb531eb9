"""Grouped stratified cross-validation, ranking metrics, and projections.

Folds never split a patient: all rows of one group land in a single fold,
and class proportions are balanced greedily across folds.  Metrics follow
the threshold-free (rank AUC) plus fixed-threshold (sensitivity,
specificity, balanced accuracy) convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from . import fusion, gbdt

#: fixed abscissa for vertically averaged ROC curves
FPR_GRID = np.linspace(0.0, 1.0, 101)


@dataclass(eq=False)
class FoldAssignment:
    """Fold index per row with the grouping that produced it."""

    k: int
    fold_of_row: np.ndarray
    groups: list[str]

    def __post_init__(self):
        self.fold_of_row = np.asarray(self.fold_of_row, dtype=np.int64)
        if np.any((self.fold_of_row < 0) | (self.fold_of_row >= self.k)):
            raise ValueError("fold indices out of range")
        by_group: dict[str, int] = {}
        for grp, f in zip(self.groups, self.fold_of_row):
            if by_group.setdefault(grp, int(f)) != int(f):
                raise ValueError(f"group {grp!r} spans two folds")

    def test_rows(self, fold: int) -> np.ndarray:
        return np.where(self.fold_of_row == fold)[0]

    def train_rows(self, fold: int) -> np.ndarray:
        return np.where(self.fold_of_row != fold)[0]


def stratified_group_kfold(labels, groups, k: int, seed: int = 0) -> FoldAssignment:
    """Greedy grouped stratification.

    Groups are shuffled by seed, sorted by size (rows) descending, and each
    is assigned to the fold that currently holds the fewest groups of its
    class (ties: fewest rows, then lowest fold index).  Every row of a group
    shares one fold; each group must carry a single label.
    """
    labels = np.asarray(labels, dtype=np.int64)
    groups = list(groups)
    if k < 2:
        raise ValueError("k must be >= 2")
    group_label: dict[str, int] = {}
    group_rows: dict[str, int] = {}
    for lab, grp in zip(labels, groups):
        if group_label.setdefault(grp, int(lab)) != int(lab):
            raise ValueError(f"group {grp!r} has inconsistent labels")
        group_rows[grp] = group_rows.get(grp, 0) + 1
    names = sorted(group_label)
    if len(names) < k:
        raise ValueError(f"only {len(names)} groups for k={k} folds")

    rng = np.random.default_rng(seed)
    order = [names[i] for i in rng.permutation(len(names))]
    order.sort(key=lambda g: -group_rows[g])  # stable: keeps shuffle among equal sizes

    n_classes = int(labels.max()) + 1
    class_groups = np.zeros((k, n_classes), dtype=np.int64)
    fold_rows = np.zeros(k, dtype=np.int64)
    fold_of_group: dict[str, int] = {}
    for grp in order:
        lab = group_label[grp]
        best = min(range(k), key=lambda f: (class_groups[f, lab], fold_rows[f], f))
        fold_of_group[grp] = best
        class_groups[best, lab] += 1
        fold_rows[best] += group_rows[grp]

    fold_of_row = np.array([fold_of_group[g] for g in groups], dtype=np.int64)
    return FoldAssignment(k=k, fold_of_row=fold_of_row, groups=groups)


# ---------------------------------------------------------------------------
# metrics

def roc_auc(scores, labels) -> float:
    """Mann-Whitney rank AUC: fraction of (positive, negative) pairs ranked
    correctly, ties counted as 1/2."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs both classes")
    ranks = rankdata(scores)
    rank_sum = float(np.sum(ranks[labels == 1]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def roc_curve_points(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    """ROC staircase (FPR, TPR) starting at (0, 0), one step per distinct score."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    order = np.argsort(-scores, kind="stable")
    y = labels[order]
    s = scores[order]
    distinct = np.where(np.diff(s) != 0.0)[0]
    cut = np.concatenate([distinct, [y.size - 1]])
    tps = np.cumsum(y)[cut].astype(np.float64)
    fps = (cut + 1) - tps
    n_pos = float(np.sum(labels == 1))
    n_neg = float(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes")
    fpr = np.concatenate([[0.0], fps / n_neg])
    tpr = np.concatenate([[0.0], tps / n_pos])
    return fpr, tpr


def interp_tpr(fpr: np.ndarray, tpr: np.ndarray, grid: np.ndarray = FPR_GRID) -> np.ndarray:
    """Staircase TPR at the FPR grid: largest TPR reached at FPR <= grid point."""
    pos = np.searchsorted(fpr, grid, side="right") - 1
    return tpr[np.clip(pos, 0, tpr.size - 1)]


def threshold_metrics(scores, labels, threshold: float = 0.5) -> tuple[float, float, float]:
    """(sensitivity, specificity, balanced accuracy) at score >= threshold."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    pos = labels == 1
    neg = labels == 0
    if not pos.any() or not neg.any():
        raise ValueError("threshold metrics need both classes")
    pred = scores >= threshold
    sens = float(np.sum(pred & pos)) / float(np.sum(pos))
    spec = float(np.sum(~pred & neg)) / float(np.sum(neg))
    return sens, spec, (sens + spec) / 2.0


# ---------------------------------------------------------------------------
# cross-validation

@dataclass(eq=False)
class MetricsSummary:
    """Per-fold metrics with mean and sample std (ddof=1) across folds."""

    k: int
    n_patients: int
    n_cancer: int
    n_control: int
    n_rows: int
    fold_auc: list[float] = field(default_factory=list)
    fold_sensitivity: list[float] = field(default_factory=list)
    fold_specificity: list[float] = field(default_factory=list)
    fold_balanced_accuracy: list[float] = field(default_factory=list)
    fold_n_test: list[int] = field(default_factory=list)

    def _agg(self, values: list[float]) -> dict[str, float]:
        arr = np.asarray(values, dtype=np.float64)
        return {"mean": float(arr.mean()), "std": float(arr.std(ddof=1)) if arr.size > 1 else 0.0}

    def aggregate(self) -> dict[str, dict[str, float]]:
        return {
            "auc": self._agg(self.fold_auc),
            "sensitivity": self._agg(self.fold_sensitivity),
            "specificity": self._agg(self.fold_specificity),
            "balanced_accuracy": self._agg(self.fold_balanced_accuracy),
        }

    def mean_auc(self) -> float:
        return self.aggregate()["auc"]["mean"]

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "n_patients": self.n_patients,
            "n_cancer": self.n_cancer,
            "n_control": self.n_control,
            "n_rows": self.n_rows,
            "folds": [
                {
                    "fold": i,
                    "auc": self.fold_auc[i],
                    "sensitivity": self.fold_sensitivity[i],
                    "specificity": self.fold_specificity[i],
                    "balanced_accuracy": self.fold_balanced_accuracy[i],
                    "n_test": self.fold_n_test[i],
                }
                for i in range(len(self.fold_auc))
            ],
            "summary": self.aggregate(),
        }


@dataclass(eq=False)
class CVResult:
    summary: MetricsSummary
    fold_rocs: list[tuple[np.ndarray, np.ndarray]]
    mean_fpr: np.ndarray
    mean_tpr: np.ndarray
    std_tpr: np.ndarray
    assignment: FoldAssignment


def _patient_counts(fm: fusion.FeatureMatrix) -> tuple[int, int, int]:
    label_of = {g: int(l) for g, l in zip(fm.groups, fm.labels)}
    n_cancer = sum(1 for v in label_of.values() if v == 1)
    return len(label_of), n_cancer, len(label_of) - n_cancer


def _fold_assignment_with_retry(labels, groups, k, seed):
    """Build folds; if any training partition is single-class, retry once
    with seed + 1, then fail loudly (silent retries hide stratification bugs)."""
    for attempt, s in enumerate((seed, seed + 1)):
        assignment = stratified_group_kfold(labels, groups, k, s)
        ok = all(
            len(np.unique(labels[assignment.train_rows(f)])) == 2
            and assignment.test_rows(f).size > 0
            for f in range(k)
        )
        if ok:
            return assignment
        if attempt == 1:
            break
    raise ValueError("a fold has single-class training data even after re-seeding")


def cross_validate(
    fm: fusion.FeatureMatrix,
    params: gbdt.GBDTParams = gbdt.GBDTParams(),
    k: int = 10,
    seed: int = 0,
    threshold: float = 0.5,
    grouped: bool = True,
) -> CVResult:
    """Grouped stratified k-fold evaluation of the fused matrix.

    Per fold, z-score scalers are fit on the training rows only, the whole
    matrix is transformed and block-scaled, a GBDT is fit on the training
    rows, and the held-out rows are scored.  ``grouped=False`` ignores
    patient grouping (every row is its own group) and exists to demonstrate
    the leakage that patient-level grouping prevents.
    """
    groups = list(fm.groups) if grouped else [f"row{i}" for i in range(fm.n_rows)]
    assignment = _fold_assignment_with_retry(fm.labels, groups, k, seed)

    fold_rocs = []
    tpr_stack = []
    n_patients, n_cancer, n_control = _patient_counts(fm)
    summary = MetricsSummary(k=k, n_patients=n_patients, n_cancer=n_cancer,
                             n_control=n_control, n_rows=fm.n_rows)
    for f in range(k):
        train_rows = assignment.train_rows(f)
        test_rows = assignment.test_rows(f)
        X, _ = fusion.standardize_fold(fm, train_rows)
        model = gbdt.train(X[train_rows], fm.labels[train_rows], params)
        scores = model.predict_proba(X[test_rows])
        y_test = fm.labels[test_rows]
        auc = roc_auc(scores, y_test)
        sens, spec, bal = threshold_metrics(scores, y_test, threshold)
        summary.fold_auc.append(auc)
        summary.fold_sensitivity.append(sens)
        summary.fold_specificity.append(spec)
        summary.fold_balanced_accuracy.append(bal)
        summary.fold_n_test.append(int(test_rows.size))
        fpr, tpr = roc_curve_points(scores, y_test)
        fold_rocs.append((fpr, tpr))
        tpr_stack.append(interp_tpr(fpr, tpr))

    tpr_stack = np.stack(tpr_stack)
    return CVResult(
        summary=summary,
        fold_rocs=fold_rocs,
        mean_fpr=FPR_GRID.copy(),
        mean_tpr=tpr_stack.mean(axis=0),
        std_tpr=tpr_stack.std(axis=0, ddof=1) if k > 1 else np.zeros_like(FPR_GRID),
        assignment=assignment,
    )


def learning_curve(
    fm: fusion.FeatureMatrix,
    fractions: list[float],
    params: gbdt.GBDTParams = gbdt.GBDTParams(),
    k: int = 10,
    seed: int = 0,
    grouped: bool = True,
) -> list[dict]:
    """AUC as a function of the training-set fraction.

    For each fraction, training groups are subsampled per class (seeded,
    deterministic) within each fold and the model is re-evaluated on the
    untouched test fold.  Fraction 1.0 reproduces ``cross_validate`` exactly.
    """
    if any(not 0 < f <= 1 for f in fractions):
        raise ValueError("fractions must lie in (0, 1]")
    groups = list(fm.groups) if grouped else [f"row{i}" for i in range(fm.n_rows)]
    assignment = _fold_assignment_with_retry(fm.labels, groups, k, seed)
    label_of = {g: int(l) for g, l in zip(groups, fm.labels)}

    rows_of_group: dict[str, list[int]] = {}
    for i, g in enumerate(groups):
        rows_of_group.setdefault(g, []).append(i)

    out = []
    for fi, frac in enumerate(fractions):
        aucs, n_train = [], []
        for f in range(assignment.k):
            train_rows = assignment.train_rows(f)
            test_rows = assignment.test_rows(f)
            train_groups = sorted({groups[i] for i in train_rows})
            selected: set[str] = set()
            for lab in (0, 1):
                members = [g for g in train_groups if label_of[g] == lab]
                take = max(1, int(np.ceil(frac * len(members))))
                rng = np.random.default_rng([seed, fi, f, lab])
                picked = rng.permutation(len(members))[:take]
                selected.update(members[i] for i in picked)
            sub_rows = np.array(
                [i for i in train_rows if groups[i] in selected], dtype=np.int64)
            X, _ = fusion.standardize_fold(fm, sub_rows)
            model = gbdt.train(X[sub_rows], fm.labels[sub_rows], params)
            scores = model.predict_proba(X[test_rows])
            aucs.append(roc_auc(scores, fm.labels[test_rows]))
            n_train.append(sub_rows.size)
        arr = np.asarray(aucs)
        out.append({
            "fraction": frac,
            "n_train_mean": float(np.mean(n_train)),
            "auc_mean": float(arr.mean()),
            "auc_std": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
        })
    return out


# ---------------------------------------------------------------------------
# projection

def pca_project(X, n_components: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Project mean-centered rows onto the top principal components.

    Returns (coordinates, explained variance ratios).  Sign convention: the
    largest-magnitude loading of each component is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least 2 rows")
    centered = X - X.mean(axis=0)
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    total = float(np.sum(s**2))
    if total <= 0.0:
        raise ValueError("zero-variance data")
    n_components = min(n_components, s.size)
    for i in range(n_components):
        j = int(np.argmax(np.abs(vt[i])))
        if vt[i, j] < 0:
            vt[i] = -vt[i]
            u[:, i] = -u[:, i]
    coords = u[:, :n_components] * s[:n_components]
    evr = s[:n_components] ** 2 / total
    return coords, evr
