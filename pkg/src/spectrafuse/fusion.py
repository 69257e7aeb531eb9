"""Patient-level alignment and low-level data fusion.

Each modality block is standardized feature-wise (statistics fit on training
rows only), divided by the fourth root of its feature count to balance
dimensionality, and the blocks are concatenated in the canonical order FTIR,
Raman, EEM.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EPS = 1e-12

#: canonical block order in fused feature vectors
MODALITY_ORDER = ("FTIR", "Raman", "EEM")


@dataclass(eq=False)
class ModalityBlock:
    """Feature rows of one modality, keyed by patient id per row."""

    modality: str
    values: np.ndarray                   # (n_rows, d_m)
    patient_ids: list[str]
    feature_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("block values must be 2-D")
        if len(self.patient_ids) != self.values.shape[0]:
            raise ValueError("patient_ids length does not match rows")
        if not self.feature_names:
            self.feature_names = [f"f{j}" for j in range(self.values.shape[1])]
        if len(self.feature_names) != self.values.shape[1]:
            raise ValueError("feature_names length does not match columns")
        if self.values.shape[1] < 1:
            raise ValueError("block needs at least one feature")

    @property
    def d_m(self) -> int:
        return self.values.shape[1]

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]


@dataclass
class ZScoreScaler:
    """Per-feature mean/std estimated on training rows only.

    Features whose population std falls below a small threshold are flagged
    degenerate and transform to 0 rather than erroring; tree models ignore
    constant columns and the EEM masks guarantee such columns exist.
    """

    mu: np.ndarray
    sigma: np.ndarray
    modality: str
    degenerate: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "modality": self.modality,
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
            "degenerate": self.degenerate.astype(int).tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ZScoreScaler":
        return cls(
            mu=np.asarray(d["mu"], dtype=np.float64),
            sigma=np.asarray(d["sigma"], dtype=np.float64),
            modality=d["modality"],
            degenerate=np.asarray(d["degenerate"], dtype=bool),
        )


def zscore_fit(train: ModalityBlock) -> ZScoreScaler:
    """Fit per-feature mean and population std from a training block."""
    if train.n_rows < 2:
        raise ValueError("need at least 2 training rows to fit a scaler")
    mu = train.values.mean(axis=0)
    sigma = train.values.std(axis=0)
    degenerate = sigma < EPS
    return ZScoreScaler(mu=mu, sigma=sigma, modality=train.modality, degenerate=degenerate)


def zscore_transform(scaler: ZScoreScaler, block: ModalityBlock) -> ModalityBlock:
    """Apply (x - mu) / sigma per feature; degenerate features map to 0."""
    if block.d_m != scaler.mu.size:
        raise ValueError("feature count does not match scaler")
    safe_sigma = np.where(scaler.degenerate, 1.0, scaler.sigma)
    out = (block.values - scaler.mu) / safe_sigma
    out[:, scaler.degenerate] = 0.0
    return ModalityBlock(
        modality=block.modality,
        values=out,
        patient_ids=list(block.patient_ids),
        feature_names=list(block.feature_names),
    )


def block_scale(block: ModalityBlock) -> ModalityBlock:
    """Divide a standardized block by d_m ** (1/4) to balance modalities."""
    return ModalityBlock(
        modality=block.modality,
        values=block.values / block.d_m ** 0.25,
        patient_ids=list(block.patient_ids),
        feature_names=list(block.feature_names),
    )


def align_patients(ids_by_modality: dict, subset: list[str] | tuple[str, ...]) -> list[str]:
    """Sorted intersection of patient ids over the modalities in ``subset``."""
    if not subset:
        raise ValueError("modality subset is empty")
    common: set[str] | None = None
    for modality in subset:
        ids = set(ids_by_modality[modality])
        common = ids if common is None else common & ids
    if not common:
        raise ValueError(f"no patient present in every modality of {tuple(subset)}")
    return sorted(common)


def collapse_replicates_for_fusion(vectors: list[np.ndarray]) -> np.ndarray:
    """Arithmetic mean of a patient's preprocessed replicate vectors."""
    if not vectors:
        raise ValueError("no replicate vectors")
    return np.mean(np.stack(vectors), axis=0)


@dataclass(eq=False)
class FeatureMatrix:
    """Fused design matrix with labels, patient groups, and block layout.

    ``blocks`` records the (modality, width) spans in column order so
    fold-local standardization can be redone per block.
    """

    values: np.ndarray                   # (n_rows, n_features)
    labels: np.ndarray                   # (n_rows,) int {0 control, 1 cancer}
    groups: list[str]                    # patient id per row
    feature_names: list[str]
    blocks: list[tuple[str, int]]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        n, d = self.values.shape
        if self.labels.shape != (n,) or len(self.groups) != n:
            raise ValueError("labels/groups rows do not match values")
        if len(self.feature_names) != d:
            raise ValueError("feature_names do not match columns")
        if sum(w for _, w in self.blocks) != d:
            raise ValueError("block widths do not sum to feature count")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature matrix contains non-finite values")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def block_slices(self) -> list[tuple[str, slice]]:
        out, start = [], 0
        for modality, width in self.blocks:
            out.append((modality, slice(start, start + width)))
            start += width
        return out


def fuse(blocks: list[ModalityBlock], labels: np.ndarray) -> FeatureMatrix:
    """Concatenate row-aligned blocks in canonical modality order.

    All blocks must list identical patient ids row for row; feature names are
    prefixed with the modality.
    """
    if not blocks:
        raise ValueError("no blocks to fuse")
    order = {m: i for i, m in enumerate(MODALITY_ORDER)}
    blocks = sorted(blocks, key=lambda b: order.get(b.modality, len(order)))
    ref_ids = blocks[0].patient_ids
    for b in blocks[1:]:
        if b.patient_ids != ref_ids:
            raise ValueError("blocks are not row-aligned to the same patients")
    values = np.hstack([b.values for b in blocks])
    names = [f"{b.modality}:{name}" for b in blocks for name in b.feature_names]
    return FeatureMatrix(
        values=values,
        labels=labels,
        groups=list(ref_ids),
        feature_names=names,
        blocks=[(b.modality, b.d_m) for b in blocks],
    )


def standardize_fold(fm: FeatureMatrix, train_rows: np.ndarray) -> tuple[np.ndarray, list[ZScoreScaler]]:
    """Fold-local standardization and block scaling of a fused matrix.

    Scalers are fit per block on ``train_rows`` only and applied to every
    row; returns the transformed matrix and the fitted scalers.
    """
    out = np.empty_like(fm.values)
    scalers = []
    for modality, sl in fm.block_slices():
        train_block = ModalityBlock(
            modality=modality,
            values=fm.values[np.ix_(train_rows, np.arange(sl.start, sl.stop))],
            patient_ids=[fm.groups[i] for i in train_rows],
        )
        scaler = zscore_fit(train_block)
        full_block = ModalityBlock(
            modality=modality,
            values=fm.values[:, sl],
            patient_ids=list(fm.groups),
        )
        scaled = block_scale(zscore_transform(scaler, full_block))
        out[:, sl] = scaled.values
        scalers.append(scaler)
    return out, scalers
