"""Scenario x configuration experiment assembly.

Turns raw sample tables into fused feature matrices and cross-validated
reports.  FTIR unimodal runs at replicate level (grouped CV keeps a
patient's replicates together); every multi-modality configuration runs at
patient level, collapsing FTIR replicates by averaging their preprocessed
vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import evaluation, fusion, gbdt, prep1d, prepeem
from .core import CONTROL, SampleTable

SCENARIOS = ("breast", "colon")

#: the seven experimental configurations: unimodal, pairwise, trimodal
CONFIGURATIONS = (
    ("FTIR",),
    ("Raman",),
    ("EEM",),
    ("FTIR", "Raman"),
    ("FTIR", "EEM"),
    ("Raman", "EEM"),
    ("FTIR", "Raman", "EEM"),
)


def config_name(modalities) -> str:
    order = {m: i for i, m in enumerate(fusion.MODALITY_ORDER)}
    return "+".join(sorted(modalities, key=lambda m: order[m]))


@dataclass(eq=False)
class PreprocessedStudy:
    """Per-record preprocessed vectors for every modality, computed once."""

    ftir_cfg: prep1d.PipelineConfig
    ftir_vectors: dict[str, list[np.ndarray]]   # patient -> one vector per retained record
    ftir_names: list[str]
    raman_vectors: dict[str, np.ndarray]
    raman_names: list[str]
    eem_vectors: dict[str, np.ndarray]
    eem_names: list[str]
    tag_of: dict[str, str]                      # patient -> cohort group

    def patients(self, modality: str) -> set[str]:
        return set({
            "FTIR": self.ftir_vectors,
            "Raman": self.raman_vectors,
            "EEM": self.eem_vectors,
        }[modality])


def _collect_tags(tables: dict[str, SampleTable]) -> dict[str, str]:
    tags: dict[str, str] = {}
    for table in tables.values():
        for rec in table.records:
            if tags.setdefault(rec.patient_id, rec.scenario_tag) != rec.scenario_tag:
                raise ValueError(f"patient {rec.patient_id} has conflicting groups")
    return tags


def preprocess_study(
    tables: dict[str, SampleTable],
    ftir_cfg: prep1d.PipelineConfig = prep1d.DEFAULT_FTIR_PIPELINE,
) -> PreprocessedStudy:
    """Run every modality's preprocessing once over all records."""
    tag_of = _collect_tags(tables)

    ftir_vectors: dict[str, list[np.ndarray]] = {}
    ftir_names: list[str] = []
    if "FTIR" in tables:
        table = tables["FTIR"]
        for pid in sorted(table.patients()):
            spectra = [rec.payload for rec in table.records_for(pid)]
            ftir_vectors[pid] = prep1d.apply_pipeline(ftir_cfg, spectra)
        ftir_names = prep1d.pipeline_feature_names(ftir_cfg, table.shared_axis())

    raman_vectors: dict[str, np.ndarray] = {}
    raman_names: list[str] = []
    if "Raman" in tables:
        table = tables["Raman"]
        for pid in sorted(table.patients()):
            (rec,) = table.records_for(pid)
            raman_vectors[pid] = prep1d.raman_pipeline(rec.payload)
        axis = prep1d.select_region(tables["Raman"].records[0].payload, 600.0, 1800.0).axis
        raman_names = [f"{v:g}" for v in axis.values]

    eem_vectors: dict[str, np.ndarray] = {}
    eem_names: list[str] = []
    if "EEM" in tables:
        table = tables["EEM"]
        for pid in sorted(table.patients()):
            (rec,) = table.records_for(pid)
            if rec.blank is None:
                raise ValueError(f"EEM record {pid} has no blank")
            eem_vectors[pid] = prepeem.eem_pipeline(rec.payload, rec.blank)
        eem_names = prepeem.feature_names(table.records[0].payload)

    return PreprocessedStudy(
        ftir_cfg=ftir_cfg,
        ftir_vectors=ftir_vectors,
        ftir_names=ftir_names,
        raman_vectors=raman_vectors,
        raman_names=raman_names,
        eem_vectors=eem_vectors,
        eem_names=eem_names,
        tag_of=tag_of,
    )


def _scenario_patients(study: PreprocessedStudy, modality: str, scenario: str) -> list[str]:
    keep = (scenario, CONTROL)
    return sorted(p for p in study.patients(modality) if study.tag_of[p] in keep)


def _labels_for(study: PreprocessedStudy, patients: list[str]) -> np.ndarray:
    return np.array([0 if study.tag_of[p] == CONTROL else 1 for p in patients], dtype=np.int64)


def build_cell_matrix(
    study: PreprocessedStudy,
    scenario: str,
    modalities,
) -> fusion.FeatureMatrix:
    """Feature matrix for one scenario x configuration cell.

    FTIR-only with ``keep_all`` replicates yields replicate-level rows; any
    other configuration aligns patients across the subset and yields one row
    per patient.
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}")
    modalities = tuple(modalities)
    if not modalities:
        raise ValueError("empty modality subset")

    if modalities == ("FTIR",):
        patients = _scenario_patients(study, "FTIR", scenario)
        rows, row_ids = [], []
        for pid in patients:
            for vec in study.ftir_vectors[pid]:
                rows.append(vec)
                row_ids.append(pid)
        block = fusion.ModalityBlock(
            modality="FTIR", values=np.stack(rows),
            patient_ids=row_ids, feature_names=list(study.ftir_names))
        return fusion.fuse([block], _labels_for(study, row_ids))

    ids_by_modality = {
        m: _scenario_patients(study, m, scenario) for m in modalities
    }
    patients = fusion.align_patients(ids_by_modality, list(modalities))
    blocks = []
    for m in modalities:
        if m == "FTIR":
            rows = [fusion.collapse_replicates_for_fusion(study.ftir_vectors[p]) for p in patients]
            names = list(study.ftir_names)
        elif m == "Raman":
            rows = [study.raman_vectors[p] for p in patients]
            names = list(study.raman_names)
        else:
            rows = [study.eem_vectors[p] for p in patients]
            names = list(study.eem_names)
        blocks.append(fusion.ModalityBlock(
            modality=m, values=np.stack(rows), patient_ids=list(patients),
            feature_names=names))
    return fusion.fuse(blocks, _labels_for(study, patients))


@dataclass(eq=False)
class CellResult:
    scenario: str
    modalities: tuple[str, ...]
    cv: evaluation.CVResult
    feature_names: list[str]
    learning_curve: list[dict] | None = None
    pca: dict | None = None   # modality -> (row_ids, tags, coords, evr)

    @property
    def name(self) -> str:
        return config_name(self.modalities)


def run_cell(
    study: PreprocessedStudy,
    scenario: str,
    modalities,
    params: gbdt.GBDTParams = gbdt.GBDTParams(),
    k: int = 10,
    seed: int = 0,
    threshold: float = 0.5,
    fractions: list[float] | None = None,
    with_pca: bool = True,
) -> CellResult:
    """Cross-validate one scenario x configuration cell."""
    fm = build_cell_matrix(study, scenario, modalities)
    cv = evaluation.cross_validate(fm, params=params, k=k, seed=seed, threshold=threshold)
    curve = None
    if fractions:
        curve = evaluation.learning_curve(fm, fractions, params=params, k=k, seed=seed)

    pca = None
    if with_pca:
        pca = {}
        for modality, sl in fm.block_slices():
            coords, evr = evaluation.pca_project(fm.values[:, sl])
            tags = [study.tag_of[p] for p in fm.groups]
            pca[modality] = (list(fm.groups), tags, coords, evr)
    return CellResult(scenario=scenario, modalities=tuple(modalities), cv=cv,
                      feature_names=list(fm.feature_names),
                      learning_curve=curve, pca=pca)


def run_suite(
    study: PreprocessedStudy,
    params: gbdt.GBDTParams = gbdt.GBDTParams(),
    k: int = 10,
    seed: int = 0,
    threshold: float = 0.5,
    scenarios=SCENARIOS,
    configurations=CONFIGURATIONS,
    fractions: list[float] | None = None,
    with_pca: bool = True,
) -> list[CellResult]:
    """All scenario x configuration cells, in fixed order."""
    results = []
    for scenario in scenarios:
        for modalities in configurations:
            results.append(run_cell(
                study, scenario, modalities, params=params, k=k, seed=seed,
                threshold=threshold, fractions=fractions, with_pca=with_pca))
    return results
