"""Data model and manifest handling for CT-scan severity datasets.

A dataset is described by a CSV manifest (``scan_id,path,severity,split``).
Each scan is a directory of lexicographically ordered 2D slice images (or a
single ``.npy`` stack); pixel data is loaded lazily and normalized per slice.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import IntEnum
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ManifestError

CLASS_NAMES = ("mild", "moderate", "severe", "critical")
NUM_CLASSES = 4

MANIFEST_COLUMNS = ("scan_id", "path", "severity", "split")


class SeverityLabel(IntEnum):
    """Four-level severity grade; stored as 1..4, classified as index 0..3."""

    MILD = 1
    MODERATE = 2
    SEVERE = 3
    CRITICAL = 4

    @property
    def index(self) -> int:
        return self.value - 1

    @property
    def class_name(self) -> str:
        return CLASS_NAMES[self.index]

    @classmethod
    def from_index(cls, index: int) -> "SeverityLabel":
        return cls(index + 1)


def normalize_slice(raw: np.ndarray) -> np.ndarray:
    """Min-max normalize one slice to [0, 1]; a constant slice maps to zeros."""
    raw = np.asarray(raw, dtype=np.float32)
    lo = float(raw.min())
    hi = float(raw.max())
    if hi <= lo:
        return np.zeros_like(raw, dtype=np.float32)
    return ((raw - lo) / (hi - lo)).astype(np.float32)


def _read_gray(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("F"), dtype=np.float32)


@dataclass
class ScanRecord:
    """One CT scan: identity, lazily loaded slice stack, optional label/split.

    ``path`` points at the scan's slice directory (or ``.npy`` stack). Synthetic
    records may instead carry their arrays in memory. Ground-truth lung and
    infection masks exist for synthetic data only.
    """

    scan_id: str
    path: Path | None = None
    label: SeverityLabel | None = None
    split: str | None = None
    slices: np.ndarray | None = field(default=None, repr=False)
    lung_masks: np.ndarray | None = field(default=None, repr=False)
    infection_masks: np.ndarray | None = field(default=None, repr=False)

    def load_slices(self) -> np.ndarray:
        """Return the (N, H, W) float32 stack, each slice normalized to [0, 1].

        Loading is idempotent: the first disk read is kept on the record.
        """
        if self.slices is not None:
            return self.slices
        if self.path is None:
            raise ManifestError(f"scan {self.scan_id!r} has no path and no in-memory slices")
        path = Path(self.path)
        if path.is_file() and path.suffix == ".npy":
            stack = np.load(path)
            if stack.ndim != 3:
                raise ManifestError(f"scan {self.scan_id!r}: expected (N, H, W) stack in {path}")
            slices = [normalize_slice(s) for s in stack]
        elif path.is_dir():
            files = sorted(p for p in path.iterdir() if p.suffix == ".png" and p.is_file())
            if not files:
                raise FileNotFoundError(f"scan {self.scan_id!r}: no slice images in {path}")
            slices = [normalize_slice(_read_gray(p)) for p in files]
        else:
            raise FileNotFoundError(f"scan {self.scan_id!r}: path {path} does not exist")
        stack = np.stack(slices).astype(np.float32)
        if stack.shape[0] < 1:
            raise ManifestError(f"scan {self.scan_id!r} has no slices")
        self.slices = stack
        return stack

    def load_ground_truth_masks(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (lung, infection) boolean stacks aligned with the slices."""
        if self.lung_masks is not None and self.infection_masks is not None:
            return self.lung_masks, self.infection_masks
        if self.path is None:
            raise ManifestError(f"scan {self.scan_id!r} has no ground-truth masks")
        mask_dir = Path(self.path) / "masks"
        if not mask_dir.is_dir():
            raise FileNotFoundError(f"scan {self.scan_id!r}: no masks directory in {self.path}")
        lung_files = sorted(mask_dir.glob("lung_*.png"))
        inf_files = sorted(mask_dir.glob("infection_*.png"))
        if not lung_files or len(lung_files) != len(inf_files):
            raise ManifestError(f"scan {self.scan_id!r}: incomplete mask set in {mask_dir}")
        lung = np.stack([_read_gray(p) > 127 for p in lung_files])
        infection = np.stack([_read_gray(p) > 127 for p in inf_files])
        self.lung_masks = lung
        self.infection_masks = infection
        return lung, infection

    @property
    def has_ground_truth_masks(self) -> bool:
        if self.lung_masks is not None:
            return True
        return self.path is not None and (Path(self.path) / "masks").is_dir()


@dataclass
class DatasetManifest:
    """An ordered collection of scan records read from one manifest file."""

    records: list[ScanRecord]
    source_path: str = ""

    def __len__(self) -> int:
        return len(self.records)

    def labeled(self) -> list[ScanRecord]:
        return [r for r in self.records if r.label is not None]

    def by_split(self, split: str) -> list[ScanRecord]:
        return [r for r in self.records if r.split == split]

    def get(self, scan_id: str) -> ScanRecord:
        for record in self.records:
            if record.scan_id == scan_id:
                return record
        raise KeyError(scan_id)


def load_manifest(path: str | Path) -> DatasetManifest:
    """Read a ``scan_id,path,severity,split`` CSV into a manifest.

    Severity may be empty (unlabeled test scans). Relative scan paths are
    resolved against the manifest's directory. Slice data is not touched here.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"manifest not found: {path}")
    records: list[ScanRecord] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(MANIFEST_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ManifestError(f"{path}: missing columns {sorted(missing)}")
        for row_no, row in enumerate(reader, start=2):
            scan_id = (row["scan_id"] or "").strip()
            if not scan_id:
                raise ManifestError(f"{path}: row {row_no}: empty scan_id")
            if scan_id in seen:
                raise ManifestError(f"{path}: duplicate scan_id {scan_id!r}")
            seen.add(scan_id)
            severity = (row["severity"] or "").strip()
            label = None
            if severity:
                try:
                    label = SeverityLabel(int(severity))
                except ValueError:
                    raise ManifestError(
                        f"{path}: row {row_no}: severity {severity!r} outside 1..4"
                    ) from None
            scan_path = Path(row["path"]).expanduser()
            if not scan_path.is_absolute():
                scan_path = path.parent / scan_path
            records.append(
                ScanRecord(
                    scan_id=scan_id,
                    path=scan_path,
                    label=label,
                    split=(row["split"] or "").strip() or None,
                )
            )
    return DatasetManifest(records=records, source_path=str(path))


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    """Write a manifest back to CSV with the canonical column order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    base = path.parent.resolve()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_COLUMNS)
        for record in manifest.records:
            scan_path = Path(record.path) if record.path is not None else None
            rendered = ""
            if scan_path is not None:
                try:
                    rendered = str(scan_path.resolve().relative_to(base))
                except ValueError:
                    rendered = str(scan_path)
            writer.writerow(
                [
                    record.scan_id,
                    rendered,
                    record.label.value if record.label is not None else "",
                    record.split or "",
                ]
            )


def class_distribution(records: list[ScanRecord]) -> np.ndarray:
    """Count labeled records per class, ordered mild..critical."""
    counts = np.zeros(NUM_CLASSES, dtype=np.int64)
    for record in records:
        if record.label is None:
            raise ManifestError(f"scan {record.scan_id!r} is unlabeled")
        counts[record.label.index] += 1
    return counts


def fixture_manifest_path(split: str) -> Path:
    """Path of a bundled metadata fixture (``train``: 462 rows, ``val``: 101)."""
    if split not in ("train", "val"):
        raise ValueError(f"unknown fixture split {split!r}")
    ref = resources.files("covsev.fixtures") / f"cov19_{split}_metadata.csv"
    return Path(str(ref))
