"""Synthetic multimodal cohort generator.

Produces FTIR / Raman / EEM sample tables with known ground truth (peak
positions, planted scatter ridges, per-patient class effects) so every
downstream stage can be tested without real patient data.  Generation is a
pure function of the spec and its seed: every random draw comes from a
stream keyed by (seed, modality, group, patient, replicate).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    EEMatrix,
    SampleRecord,
    SampleTable,
    SpectralAxis,
    Spectrum1D,
    WAVELENGTH,
    WAVENUMBER,
    save_dataset,
)

GROUPS = ("breast", "colon", "control")
_GROUP_PREFIX = {"breast": "BR", "colon": "CO", "control": "CT"}
_MOD_INDEX = {"FTIR": 0, "Raman": 1, "EEM": 2}

# (center, width, amplitude); disease-linked peaks are marked separately
FTIR_PEAKS = (
    (1080.0, 30.0, 0.35),
    (1240.0, 28.0, 0.30),
    (1400.0, 25.0, 0.25),
    (1545.0, 25.0, 0.70),
    (1650.0, 28.0, 1.00),
    (2852.0, 18.0, 0.30),
    (2925.0, 20.0, 0.45),
    (2960.0, 15.0, 0.30),
    (3290.0, 120.0, 0.60),
)
FTIR_DISEASE_PEAKS = (1080.0, 1240.0)

RAMAN_PEAKS = (
    (853.0, 10.0, 0.35),
    (1003.0, 7.0, 1.00),
    (1157.0, 10.0, 0.40),
    (1340.0, 12.0, 0.50),
    (1450.0, 13.0, 0.70),
    (1655.0, 15.0, 0.80),
    (2930.0, 20.0, 0.90),
)
RAMAN_DISEASE_PEAKS = (1340.0,)

# (ex center, em center, ex width, em width, amplitude)
EEM_FLUOROPHORES = (
    (280.0, 350.0, 16.0, 25.0, 60.0),
    (340.0, 460.0, 20.0, 32.0, 35.0),
    (450.0, 520.0, 16.0, 24.0, 20.0),
)
EEM_DISEASE_FLUOROPHORE = 1  # the (340, 460) band

#: planted scatter ridges live strictly inside the 25 nm removal window
RIDGE_HALF_SUPPORT = 20.0

#: per-modality availability shaped like the study cohort: group -> (offset,
#: count) within the group's patient index range.  FTIR covers everyone.
COHORT_AVAILABILITY = {
    "Raman": {"breast": (0, 98), "colon": (0, 97), "control": (0, 77)},
    "EEM": {"breast": (1, 98), "colon": (1, 98), "control": (8, 80)},
}


@dataclass(frozen=True)
class SynthSpec:
    """Everything the generator needs; all fields have desk-scale defaults."""

    n_breast: int = 100
    n_colon: int = 100
    n_control: int = 100
    replicate_count: int = 3          # FTIR acquisitions per patient
    seed: int = 0

    # class effect on disease peak amplitudes; the EEM weight is larger
    # because its fluorophore amplitudes sit on a ~35x larger scale
    delta: float = 0.8
    effect_weights: dict = field(default_factory=lambda: {"FTIR": 1.0, "Raman": 1.0, "EEM": 10.0})
    effect_carriers: dict = field(default_factory=dict)  # modality -> all|even|odd|none

    noise: float = 0.01               # 1-D white noise sigma
    eem_noise: float = 0.4
    patient_jitter: float = 0.08      # bounded (uniform) amplitude variation
    replicate_jitter: float = 0.02

    ftir_step: float = 4.0
    raman_step: float = 2.0
    eem_ex_step: float = 5.0
    eem_em_step: float = 5.0

    availability: dict | None = None  # modality -> group -> (offset, count)

    def __post_init__(self):
        if min(self.n_breast, self.n_colon, self.n_control) < 0:
            raise ValueError("negative group size")
        if self.replicate_count < 1:
            raise ValueError("replicate_count must be >= 1")
        if self.noise < 0 or self.eem_noise < 0:
            raise ValueError("noise must be >= 0")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")

    def group_sizes(self) -> dict[str, int]:
        return {"breast": self.n_breast, "colon": self.n_colon, "control": self.n_control}

    def to_dict(self) -> dict:
        return {
            "n_breast": self.n_breast,
            "n_colon": self.n_colon,
            "n_control": self.n_control,
            "replicate_count": self.replicate_count,
            "seed": self.seed,
            "delta": self.delta,
            "effect_weights": dict(self.effect_weights),
            "effect_carriers": dict(self.effect_carriers),
            "noise": self.noise,
            "eem_noise": self.eem_noise,
            "patient_jitter": self.patient_jitter,
            "replicate_jitter": self.replicate_jitter,
            "ftir_step": self.ftir_step,
            "raman_step": self.raman_step,
            "eem_ex_step": self.eem_ex_step,
            "eem_em_step": self.eem_em_step,
            "availability": self.availability,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        avail = d.get("availability")
        if avail is not None:
            avail = {
                mod: {grp: tuple(v) for grp, v in per.items()}
                for mod, per in avail.items()
            }
        kwargs = dict(d)
        kwargs["availability"] = avail
        return cls(**kwargs)


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def _patients(spec: SynthSpec):
    for group in GROUPS:
        n = spec.group_sizes()[group]
        prefix = _GROUP_PREFIX[group]
        for idx in range(n):
            yield f"{prefix}{idx:03d}", group, idx


def _available(spec: SynthSpec, modality: str, group: str, idx: int) -> bool:
    if spec.availability is None:
        return True
    per = spec.availability.get(modality)
    if per is None or group not in per:
        return True
    offset, count = per[group]
    return offset <= idx < offset + count


def class_effect(spec: SynthSpec, modality: str, group: str, idx: int) -> float:
    """Amplitude shift applied to this patient's disease-linked bands."""
    if group == "control":
        return 0.0
    carriers = spec.effect_carriers.get(modality, "all")
    if carriers == "none":
        return 0.0
    if carriers == "even" and idx % 2 != 0:
        return 0.0
    if carriers == "odd" and idx % 2 != 1:
        return 0.0
    return spec.delta * float(spec.effect_weights.get(modality, 1.0))


def _rng(spec: SynthSpec, modality: str, group: str, idx: int, extra: int = 0):
    return np.random.default_rng(
        [spec.seed, _MOD_INDEX[modality], GROUPS.index(group), idx, extra])


def _gaussians(x: np.ndarray, peaks, amps) -> np.ndarray:
    out = np.zeros_like(x)
    for (center, width, _), amp in zip(peaks, amps):
        out += amp * np.exp(-0.5 * ((x - center) / width) ** 2)
    return out


def gen_1d(spec: SynthSpec, modality: str) -> tuple[SampleTable, dict]:
    """Synthesize the FTIR or Raman table.

    FTIR: Gaussian bands on a slow polynomial drift, ``replicate_count``
    acquisitions per patient with replicate-level jitter.  Raman: bands on a
    strong decaying fluorescence background with a saturated low-shift
    plateau, one acquisition per patient.
    """
    if modality == "FTIR":
        axis_vals = _grid(650.0, 4000.0, spec.ftir_step)
        peaks, disease = FTIR_PEAKS, FTIR_DISEASE_PEAKS
    elif modality == "Raman":
        axis_vals = _grid(30.0, 3358.0, spec.raman_step)
        peaks, disease = RAMAN_PEAKS, RAMAN_DISEASE_PEAKS
    else:
        raise ValueError("gen_1d handles FTIR and Raman")
    axis = SpectralAxis(axis_vals, unit=WAVENUMBER)
    disease_idx = [i for i, (c, _, _) in enumerate(peaks) if c in disease]

    records = []
    effects: dict[str, float] = {}
    for pid, group, idx in _patients(spec):
        if not _available(spec, modality, group, idx):
            continue
        rng = _rng(spec, modality, group, idx)
        amps = np.array([a for (_, _, a) in peaks])
        amps = amps * (1.0 + spec.patient_jitter * rng.uniform(-1.0, 1.0, amps.size))
        effect = class_effect(spec, modality, group, idx)
        effects[pid] = effect
        for i in disease_idx:
            amps[i] += effect

        if modality == "FTIR":
            t = (axis_vals - axis_vals[0]) / (axis_vals[-1] - axis_vals[0])
            background = (rng.uniform(0.05, 0.25)
                          + rng.uniform(-0.1, 0.1) * t
                          + rng.uniform(0.0, 0.1) * t**2)
            n_rep = spec.replicate_count
        else:
            fluor_amp = rng.uniform(3.0, 8.0)
            tau = rng.uniform(900.0, 1500.0)
            sat_amp = 30.0 * (1.0 + 0.2 * rng.uniform(-1.0, 1.0))
            background = (fluor_amp * np.exp(-(axis_vals - axis_vals[0]) / tau)
                          + sat_amp / (1.0 + np.exp((axis_vals - 180.0) / 25.0)))
            n_rep = 1

        for rep in range(1, n_rep + 1):
            rep_rng = _rng(spec, modality, group, idx, extra=rep)
            rep_amps = amps * (1.0 + spec.replicate_jitter * rep_rng.uniform(-1.0, 1.0, amps.size))
            signal = _gaussians(axis_vals, peaks, rep_amps) + background
            if spec.noise > 0:
                signal = signal + spec.noise * rep_rng.standard_normal(axis_vals.size)
            records.append(SampleRecord(
                patient_id=pid, scenario_tag=group, replicate=rep,
                payload=Spectrum1D(axis=axis, intensity=signal)))

    truth = {
        "peaks": [(c, w) for (c, w, _) in peaks],
        "disease_peaks": list(disease),
        "effects": effects,
        "axis": axis_vals,
    }
    return SampleTable(modality=modality, records=records), truth


def _ridge_pattern(ex: np.ndarray, em: np.ndarray) -> np.ndarray:
    """Triangular scatter ridges with hard support inside the removal window."""
    d1 = np.abs(em[None, :] - ex[:, None])
    d2 = np.abs(em[None, :] - 2.0 * ex[:, None])
    r1 = np.clip(1.0 - d1 / RIDGE_HALF_SUPPORT, 0.0, None)
    r2 = np.clip(1.0 - d2 / RIDGE_HALF_SUPPORT, 0.0, None)
    return 120.0 * r1 + 60.0 * r2


def gen_eem(spec: SynthSpec) -> tuple[SampleTable, dict]:
    """Synthesize the EEM table with per-sample blanks.

    Samples are blank + scatter ridges + 2-D Gaussian fluorophores + noise;
    the planted ridge support is recorded so masking tests can check
    coverage, and the strongest fluorophore sits far from both diagonals.
    """
    ex_vals = _grid(250.0, 520.0, spec.eem_ex_step)
    em_vals = _grid(270.0, 750.0, spec.eem_em_step)
    ex_axis = SpectralAxis(ex_vals, unit=WAVELENGTH)
    em_axis = SpectralAxis(em_vals, unit=WAVELENGTH)
    ridges = _ridge_pattern(ex_vals, em_vals)

    fluor_shapes = []
    for (exc, emc, exw, emw, _) in EEM_FLUOROPHORES:
        shape = (np.exp(-0.5 * ((ex_vals - exc) / exw) ** 2)[:, None]
                 * np.exp(-0.5 * ((em_vals - emc) / emw) ** 2)[None, :])
        fluor_shapes.append(shape)

    records = []
    effects: dict[str, float] = {}
    for pid, group, idx in _patients(spec):
        if not _available(spec, "EEM", group, idx):
            continue
        rng = _rng(spec, "EEM", group, idx)
        base_level = 2.0 * (1.0 + 0.05 * rng.uniform(-1.0, 1.0))
        blank_grid = base_level + 0.6 * ridges

        amps = np.array([a for (_, _, _, _, a) in EEM_FLUOROPHORES])
        amps = amps * (1.0 + spec.patient_jitter * rng.uniform(-1.0, 1.0, amps.size))
        effect = class_effect(spec, "EEM", group, idx)
        effects[pid] = effect
        amps[EEM_DISEASE_FLUOROPHORE] += effect

        sample_grid = blank_grid + 0.4 * ridges
        for shape, amp in zip(fluor_shapes, amps):
            sample_grid = sample_grid + amp * shape
        if spec.eem_noise > 0:
            sample_grid = sample_grid + spec.eem_noise * rng.standard_normal(sample_grid.shape)

        records.append(SampleRecord(
            patient_id=pid, scenario_tag=group, replicate=1,
            payload=EEMatrix(ex_axis=ex_axis, em_axis=em_axis, grid=sample_grid),
            blank=EEMatrix(ex_axis=ex_axis, em_axis=em_axis, grid=blank_grid)))

    truth = {
        "ridge_cells": ridges > 0.0,
        "fluorophores": [(exc, emc) for (exc, emc, _, _, _) in EEM_FLUOROPHORES],
        "strongest_fluorophore": EEM_FLUOROPHORES[0][:2],
        "effects": effects,
        "ex_axis": ex_vals,
        "em_axis": em_vals,
    }
    return SampleTable(modality="EEM", records=records), truth


def generate_dataset(spec: SynthSpec) -> dict[str, SampleTable]:
    """All three modality tables for one spec."""
    ftir, _ = gen_1d(spec, "FTIR")
    raman, _ = gen_1d(spec, "Raman")
    eem, _ = gen_eem(spec)
    return {"FTIR": ftir, "Raman": raman, "EEM": eem}


def write_dataset(spec: SynthSpec, out_dir) -> str:
    """Generate and write a dataset tree; returns the manifest path."""
    return str(save_dataset(generate_dataset(spec), out_dir))


# ---------------------------------------------------------------------------
# ready-made specs

def separable_spec(seed: int = 0, **overrides) -> SynthSpec:
    """Large class effect in every modality: all configurations separate."""
    base = SynthSpec(seed=seed, delta=0.8, availability=COHORT_AVAILABILITY)
    return replace(base, **overrides)


def null_spec(seed: int = 0, **overrides) -> SynthSpec:
    """No class effect: labels carry no signal."""
    base = SynthSpec(seed=seed, delta=0.0, availability=COHORT_AVAILABILITY)
    return replace(base, **overrides)


def complementary_spec(seed: int = 0, **overrides) -> SynthSpec:
    """Disease signal split across modalities.

    Half the cancer patients express the FTIR marker, the other half the EEM
    fluorophore shift, and a weak Raman effect is shared; no single modality
    sees every case, so fusion beats the best unimodal model.
    """
    base = SynthSpec(
        seed=seed,
        delta=0.8,
        effect_carriers={"FTIR": "even", "EEM": "odd", "Raman": "all"},
        effect_weights={"FTIR": 1.5, "EEM": 4.0, "Raman": 0.03},
        noise=0.02,
        eem_noise=0.6,
        availability=COHORT_AVAILABILITY,
    )
    return replace(base, **overrides)


def small_spec(seed: int = 0, **overrides) -> SynthSpec:
    """Tiny fast cohort for smoke tests and demos."""
    base = SynthSpec(
        n_breast=8, n_colon=8, n_control=8,
        replicate_count=2,
        seed=seed,
        delta=0.8,
        ftir_step=10.0,
        raman_step=8.0,
        eem_ex_step=15.0,
        eem_em_step=15.0,
    )
    return replace(base, **overrides)
