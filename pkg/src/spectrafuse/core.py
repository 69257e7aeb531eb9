"""Domain data model and dataset ingestion.

Holds the 1-D spectrum / excitation-emission matrix containers, the
per-modality sample tables, and the manifest-based disk format
(``dataset.json`` plus CSV payloads).  Everything is stored as float64 and
frozen after load so tables can be shared read-only across workers.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

WAVENUMBER = "cm-1"
WAVELENGTH = "nm"

MODALITIES = ("FTIR", "Raman", "EEM")
SCENARIO_TAGS = ("breast", "colon", "control")

CANCER = "cancer"
CONTROL = "control"


class DatasetError(ValueError):
    """Raised for malformed manifests, payload files, or table invariants."""


def _as_readonly_f64(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SpectralAxis:
    """Strictly increasing acquisition axis (wavenumbers or wavelengths)."""

    values: np.ndarray
    unit: str = WAVENUMBER

    def __post_init__(self):
        arr = _as_readonly_f64(self.values)
        if arr.ndim != 1 or arr.size < 2:
            raise DatasetError("axis needs at least 2 points")
        if not np.all(np.isfinite(arr)):
            raise DatasetError("axis contains non-finite values")
        if np.any(np.diff(arr) <= 0):
            raise DatasetError("axis not strictly increasing")
        if self.unit not in (WAVENUMBER, WAVELENGTH):
            raise DatasetError(f"unknown axis unit {self.unit!r}")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    @property
    def step(self) -> float:
        """Mean grid spacing."""
        return float(np.mean(np.diff(self.values)))

    def same_grid(self, other: "SpectralAxis") -> bool:
        return self.unit == other.unit and np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class Spectrum1D:
    """One FTIR or Raman acquisition: axis plus intensity vector."""

    axis: SpectralAxis
    intensity: np.ndarray

    def __post_init__(self):
        arr = _as_readonly_f64(self.intensity)
        if arr.ndim != 1 or arr.size != len(self.axis):
            raise DatasetError("intensity length does not match axis")
        if not np.all(np.isfinite(arr)):
            raise DatasetError("intensity contains non-finite values")
        object.__setattr__(self, "intensity", arr)

    def __len__(self) -> int:
        return self.intensity.size


@dataclass(frozen=True, eq=False)
class EEMatrix:
    """Fluorescence excitation x emission intensity grid (nm axes).

    ``mask`` flags entries excluded by preprocessing; masked entries hold 0
    in ``grid``.  Unmasked entries must be finite.
    """

    ex_axis: SpectralAxis
    em_axis: SpectralAxis
    grid: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        grid = _as_readonly_f64(self.grid)
        shape = (len(self.ex_axis), len(self.em_axis))
        if grid.shape != shape:
            raise DatasetError(f"EEM grid shape {grid.shape} does not match axes {shape}")
        if self.mask is None:
            mask = np.zeros(shape, dtype=bool)
        else:
            mask = np.asarray(self.mask, dtype=bool).copy()
            if mask.shape != shape:
                raise DatasetError("EEM mask shape does not match axes")
        if not np.all(np.isfinite(grid[~mask])):
            raise DatasetError("EEM grid contains non-finite unmasked values")
        mask.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "mask", mask)

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape


@dataclass(frozen=True, eq=False)
class SampleRecord:
    """One acquisition for one patient.

    The cohort group (``scenario_tag``) is stored as acquired; the binary
    class label is derived at experiment time so one dataset serves both
    cancer-vs-control scenarios.
    """

    patient_id: str
    scenario_tag: str
    replicate: int
    payload: Spectrum1D | EEMatrix
    blank: EEMatrix | None = None

    def __post_init__(self):
        if self.scenario_tag not in SCENARIO_TAGS:
            raise DatasetError(f"unknown group {self.scenario_tag!r}")
        if self.replicate < 1:
            raise DatasetError("replicate must be >= 1")

    @property
    def label(self) -> str:
        return CONTROL if self.scenario_tag == CONTROL else CANCER


@dataclass(eq=False)
class SampleTable:
    """All records of one modality, sharing one axis after finalization."""

    modality: str
    records: list[SampleRecord] = field(default_factory=list)

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise DatasetError(f"unknown modality {self.modality!r}")
        seen = set()
        for rec in self.records:
            key = (rec.patient_id, rec.replicate)
            if key in seen:
                raise DatasetError(f"duplicate (patient, replicate) {key} in {self.modality}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.records)

    def patients(self) -> set[str]:
        return {rec.patient_id for rec in self.records}

    def records_for(self, patient_id: str) -> list[SampleRecord]:
        recs = [r for r in self.records if r.patient_id == patient_id]
        return sorted(recs, key=lambda r: r.replicate)

    def shared_axis(self) -> SpectralAxis:
        """Common 1-D axis of the table; raises if records disagree."""
        first = self.records[0].payload
        if isinstance(first, EEMatrix):
            raise DatasetError("shared_axis is defined for 1-D tables only")
        axis = first.axis
        for rec in self.records[1:]:
            if not axis.same_grid(rec.payload.axis):
                raise DatasetError(f"{self.modality} records do not share one axis")
        return axis


# ---------------------------------------------------------------------------
# resampling

def resample_to_grid(s: Spectrum1D, target: SpectralAxis) -> Spectrum1D:
    """Linearly interpolate a spectrum onto ``target``.

    The target range must lie inside the source range; extrapolation is
    refused.  Exact (to rounding) for signals linear between source nodes.
    """
    src = s.axis.values
    tgt = target.values
    if tgt[0] < src[0] or tgt[-1] > src[-1]:
        raise DatasetError(
            f"target range [{tgt[0]}, {tgt[-1]}] extends beyond source [{src[0]}, {src[-1]}]"
        )
    if s.axis.same_grid(target):
        return Spectrum1D(axis=target, intensity=s.intensity)
    return Spectrum1D(axis=target, intensity=np.interp(tgt, src, s.intensity))


def common_grid(axes: list[SpectralAxis]) -> SpectralAxis:
    """Intersection range of all axes at the coarsest native step observed.

    Never extrapolates: the grid starts at the largest minimum and steps by
    the largest mean spacing, staying within the smallest maximum.
    """
    if not axes:
        raise DatasetError("no axes to merge")
    unit = axes[0].unit
    if any(a.unit != unit for a in axes):
        raise DatasetError("axes mix units")
    lo = max(float(a.values[0]) for a in axes)
    hi = min(float(a.values[-1]) for a in axes)
    step = max(a.step for a in axes)
    if hi - lo < step:
        raise DatasetError("axis ranges do not overlap")
    n = int(np.floor((hi - lo) / step)) + 1
    return SpectralAxis(lo + step * np.arange(n), unit=unit)


def _finalize_1d_table(table: SampleTable) -> SampleTable:
    axes = [rec.payload.axis for rec in table.records]
    if all(axes[0].same_grid(a) for a in axes[1:]):
        return table
    grid = common_grid(axes)
    resampled = [
        SampleRecord(
            patient_id=rec.patient_id,
            scenario_tag=rec.scenario_tag,
            replicate=rec.replicate,
            payload=resample_to_grid(rec.payload, grid),
        )
        for rec in table.records
    ]
    return SampleTable(modality=table.modality, records=resampled)


# ---------------------------------------------------------------------------
# disk format

def _read_spectrum_csv(path: Path, unit: str) -> Spectrum1D:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:2]] != ["axis", "intensity"]:
                raise DatasetError(f"{path}: expected header 'axis,intensity'")
            rows = [(float(r[0]), float(r[1])) for r in reader if r]
    except (ValueError, IndexError) as exc:
        raise DatasetError(f"{path}: malformed CSV ({exc})") from exc
    if not rows:
        raise DatasetError(f"{path}: empty spectrum")
    axis_vals, intens = zip(*rows)
    return Spectrum1D(axis=SpectralAxis(axis_vals, unit=unit), intensity=intens)


def _read_eem_csv(path: Path) -> EEMatrix:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
        em = [float(v) for v in rows[0][1:]]
        ex, body = [], []
        for row in rows[1:]:
            ex.append(float(row[0]))
            vals = [float(v) for v in row[1:]]
            if len(vals) != len(em):
                raise DatasetError(f"{path}: ragged EEM row")
            body.append(vals)
    except (ValueError, IndexError) as exc:
        raise DatasetError(f"{path}: malformed EEM CSV ({exc})") from exc
    return EEMatrix(
        ex_axis=SpectralAxis(ex, unit=WAVELENGTH),
        em_axis=SpectralAxis(em, unit=WAVELENGTH),
        grid=np.array(body),
    )


def load_dataset(manifest_path: str | Path) -> dict[str, SampleTable]:
    """Load a ``dataset.json`` manifest and all referenced payload files.

    Returns one finalized :class:`SampleTable` per modality present.  1-D
    tables are resampled onto a common per-modality grid; EEM tables must
    already share their axes.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise DatasetError(f"manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetError(f"manifest is not valid JSON: {exc}") from exc
    if "modalities" not in manifest:
        raise DatasetError("manifest missing 'modalities' key")
    base = manifest_path.parent

    tables: dict[str, SampleTable] = {}
    for modality, entries in manifest["modalities"].items():
        if modality not in MODALITIES:
            raise DatasetError(f"unknown modality {modality!r} in manifest")
        records = []
        for entry in entries:
            try:
                pid = str(entry["patient_id"])
                group = str(entry["group"])
                replicate = int(entry.get("replicate", 1))
                file_path = base / entry["file"]
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"bad manifest entry in {modality}: {entry}") from exc
            if not file_path.exists():
                raise DatasetError(f"missing file: {file_path}")
            if modality == "EEM":
                payload = _read_eem_csv(file_path)
                blank_rel = entry.get("blank")
                blank = None
                if blank_rel is not None:
                    blank_path = base / blank_rel
                    if not blank_path.exists():
                        raise DatasetError(f"missing blank file: {blank_path}")
                    blank = _read_eem_csv(blank_path)
                    if not (blank.ex_axis.same_grid(payload.ex_axis)
                            and blank.em_axis.same_grid(payload.em_axis)):
                        raise DatasetError(f"{file_path}: blank axes differ from sample")
                records.append(SampleRecord(pid, group, replicate, payload, blank=blank))
            else:
                payload = _read_spectrum_csv(file_path, unit=WAVENUMBER)
                records.append(SampleRecord(pid, group, replicate, payload))
        table = SampleTable(modality=modality, records=records)
        if modality != "EEM":
            table = _finalize_1d_table(table)
        else:
            ref = table.records[0].payload
            for rec in table.records[1:]:
                if not (ref.ex_axis.same_grid(rec.payload.ex_axis)
                        and ref.em_axis.same_grid(rec.payload.em_axis)):
                    raise DatasetError("EEM records do not share one axis pair")
        tables[modality] = table
    return tables


def _fmt(x: float) -> str:
    # repr of a Python float is the shortest string that round-trips bit-exactly
    return repr(float(x))


def _write_spectrum_csv(path: Path, s: Spectrum1D) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("axis,intensity\n")
        for x, y in zip(s.axis.values, s.intensity):
            fh.write(f"{_fmt(x)},{_fmt(y)}\n")


def _write_eem_csv(path: Path, m: EEMatrix) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("," + ",".join(_fmt(v) for v in m.em_axis.values) + "\n")
        for i, ex in enumerate(m.ex_axis.values):
            fh.write(_fmt(ex) + "," + ",".join(_fmt(v) for v in m.grid[i]) + "\n")


def save_dataset(tables: dict[str, SampleTable], out_dir: str | Path) -> Path:
    """Write tables as a ``dataset.json`` + CSV tree; returns the manifest path.

    Uses round-trip float formatting so save -> load reproduces payloads
    bit-exactly.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest: dict = {"modalities": {}}
    for modality, table in tables.items():
        mod_dir = out_dir / modality.lower()
        mod_dir.mkdir(exist_ok=True)
        entries = []
        for rec in table.records:
            stem = f"{rec.patient_id}_r{rec.replicate}"
            entry = {
                "patient_id": rec.patient_id,
                "group": rec.scenario_tag,
                "replicate": rec.replicate,
            }
            if isinstance(rec.payload, EEMatrix):
                fname = f"{modality.lower()}/{stem}.csv"
                _write_eem_csv(out_dir / fname, rec.payload)
                entry["file"] = fname
                if rec.blank is not None:
                    bname = f"{modality.lower()}/{stem}_blank.csv"
                    _write_eem_csv(out_dir / bname, rec.blank)
                    entry["blank"] = bname
            else:
                fname = f"{modality.lower()}/{stem}.csv"
                _write_spectrum_csv(out_dir / fname, rec.payload)
                entry["file"] = fname
            entries.append(entry)
        manifest["modalities"][modality] = entries
    manifest_path = out_dir / "dataset.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    return manifest_path
