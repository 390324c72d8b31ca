"""Deterministic synthetic CT-scan generator.

Stands in for real severity-graded CT data in tests and desk-scale runs.
Each scan is a stack of axial slices containing a bright body ellipse, two
darker elliptical lung fields over a central depth span, and an infection
region grown inside the lungs. The infection-to-lung volume fraction is drawn
from a class-dependent band, so the four classes are separable by infection
extent and severity labels are meaningful by construction.

Generation is a pure function of ``(n_per_class, seed, dims)``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .data import (
    CLASS_NAMES,
    DatasetManifest,
    ScanRecord,
    SeverityLabel,
    normalize_slice,
    write_manifest,
)

# Infection-to-lung volume fraction band per class, mild..critical.
CLASS_FRACTION_BANDS = ((0.01, 0.10), (0.10, 0.25), (0.25, 0.50), (0.50, 0.85))

# Intensity design (pre-normalization). Body tissue sets the slice maximum, so
# after per-slice min-max normalization lung voxels stay inside [0.05, 0.6]
# (the band the heuristic slice filter looks at) and body/air stay outside.
_AIR = (0.0, 0.03)
_BODY = (0.80, 0.92)
_LUNG = (0.08, 0.35)
_INFECTION = (0.37, 0.50)


def _ellipse_mask(h: int, w: int, cy: float, cx: float, ry: float, rx: float) -> np.ndarray:
    yy, xx = np.ogrid[:h, :w]
    return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0


def _lung_geometry(rng: np.random.Generator, dims: tuple[int, int, int]) -> dict:
    d, h, w = dims
    margin_lo = 1 + int(rng.integers(0, max(1, d // 8)))
    margin_hi = 1 + int(rng.integers(0, max(1, d // 8)))
    z0, z1 = margin_lo, d - 1 - margin_hi
    min_span = max(4, d // 2)
    while z1 - z0 + 1 < min_span:
        if z0 > 1:
            z0 -= 1
        elif z1 < d - 2:
            z1 += 1
        else:
            break
    return {
        "z0": z0,
        "z1": z1,
        "cy": h * rng.uniform(0.49, 0.55),
        "cx_left": w * rng.uniform(0.30, 0.34),
        "cx_right": w * rng.uniform(0.66, 0.70),
        "ry": h * rng.uniform(0.22, 0.28),
        "rx": w * rng.uniform(0.12, 0.16),
    }


def _lung_stack(geom: dict, dims: tuple[int, int, int]) -> np.ndarray:
    """Boolean (D, H, W) lung mask: two ellipses, widest mid-span."""
    d, h, w = dims
    lung = np.zeros(dims, dtype=bool)
    z0, z1 = geom["z0"], geom["z1"]
    zc = 0.5 * (z0 + z1)
    zr = max(0.5 * (z1 - z0), 0.5)
    for z in range(z0, z1 + 1):
        t = (z - zc) / zr
        # keep >= 0.65 of the full axes wherever the lung appears at all, so
        # lung area stays >= 5% of the central crop on every lung slice
        scale = 0.65 + 0.35 * float(np.sqrt(max(0.0, 1.0 - t * t)))
        left = _ellipse_mask(h, w, geom["cy"], geom["cx_left"], geom["ry"] * scale, geom["rx"] * scale)
        right = _ellipse_mask(h, w, geom["cy"], geom["cx_right"], geom["ry"] * scale, geom["rx"] * scale)
        lung[z] = left | right
    return lung


def _infection_stack(
    rng: np.random.Generator, lung: np.ndarray, band: tuple[float, float]
) -> np.ndarray:
    """Grow a blob-like infection mask covering a band-interior lung fraction."""
    lo, hi = band
    lung_idx = np.argwhere(lung)
    n_lung = len(lung_idx)
    width = hi - lo
    target = rng.uniform(lo + 0.1 * width, hi - 0.1 * width)
    k = int(round(target * n_lung))
    k = max(k, int(np.ceil(lo * n_lung)))
    while k / n_lung >= hi and k > 1:
        k -= 1

    # smooth multi-bump field over lung voxels; its top-k superlevel set is
    # the infection region, which makes the covered fraction exactly k/n_lung
    d = lung.shape[0]
    depth_weight = lung.shape[1] / max(d, 1)
    coords = lung_idx.astype(np.float64)
    coords[:, 0] *= depth_weight
    n_seeds = 2 + int(round(6 * target))
    seed_rows = rng.integers(0, n_lung, size=n_seeds)
    extent = float(np.ptp(coords, axis=0).max()) + 1.0
    field = np.zeros(n_lung, dtype=np.float64)
    for row in seed_rows:
        sigma = extent * rng.uniform(0.10, 0.30)
        delta = coords - coords[row]
        field += np.exp(-(delta**2).sum(axis=1) / (2.0 * sigma * sigma))
    order = np.argsort(-field, kind="stable")
    chosen = lung_idx[order[:k]]
    infection = np.zeros_like(lung)
    infection[chosen[:, 0], chosen[:, 1], chosen[:, 2]] = True
    return infection


def _render_slices(
    rng: np.random.Generator,
    dims: tuple[int, int, int],
    lung: np.ndarray,
    infection: np.ndarray,
) -> np.ndarray:
    """Rasterize uint8 slices: air background, bright body, textured lungs."""
    d, h, w = dims
    body = _ellipse_mask(h, w, h * 0.5, w * 0.5, h * 0.42, w * 0.46)
    stack = np.empty((d, h, w), dtype=np.uint8)
    for z in range(d):
        img = rng.normal(0.012, 0.006, size=(h, w)).clip(*_AIR)
        img[body] = rng.normal(0.85, 0.02, size=int(body.sum())).clip(*_BODY)
        lung_z = lung[z]
        if lung_z.any():
            img[lung_z] = rng.normal(0.18, 0.05, size=int(lung_z.sum())).clip(*_LUNG)
        inf_z = infection[z]
        if inf_z.any():
            img[inf_z] = rng.normal(0.44, 0.025, size=int(inf_z.sum())).clip(*_INFECTION)
        stack[z] = np.round(img * 255.0).astype(np.uint8)
    return stack


def _save_png(arr: np.ndarray, path: Path) -> None:
    Image.fromarray(arr, mode="L").save(path)


def generate_synthetic_dataset(
    n_per_class: int,
    seed: int,
    dims: tuple[int, int, int] = (40, 128, 128),
    out_dir: str | Path | None = None,
) -> DatasetManifest:
    """Generate ``4 * n_per_class`` labeled synthetic scans.

    Records carry their slice stacks and ground-truth lung/infection masks in
    memory. When ``out_dir`` is given the scans are also written to disk as
    ``<out_dir>/<scan_id>/slice_####.png`` with 0/255 mask PNGs under
    ``masks/``, plus a ``manifest.csv``; on-disk and in-memory pixel data are
    bit-identical (slices are quantized to uint8 before use).
    """
    if n_per_class < 1:
        raise ValueError(f"n_per_class must be >= 1, got {n_per_class}")
    dims = tuple(int(v) for v in dims)
    if len(dims) != 3 or any(v < 8 for v in dims):
        raise ValueError(f"dims must be three values >= 8, got {dims}")

    root = Path(out_dir) if out_dir is not None else None
    if root is not None:
        root.mkdir(parents=True, exist_ok=True)

    records = []
    for class_index, band in enumerate(CLASS_FRACTION_BANDS):
        for i in range(n_per_class):
            rng = np.random.default_rng([seed, class_index, i])
            scan_id = f"synth_{CLASS_NAMES[class_index]}_{i:03d}"
            geom = _lung_geometry(rng, dims)
            lung = _lung_stack(geom, dims)
            infection = _infection_stack(rng, lung, band)
            raw = _render_slices(rng, dims, lung, infection)
            normalized = np.stack([normalize_slice(s) for s in raw])
            record = ScanRecord(
                scan_id=scan_id,
                label=SeverityLabel.from_index(class_index),
                slices=normalized,
                lung_masks=lung,
                infection_masks=infection,
            )
            if root is not None:
                scan_dir = root / scan_id
                mask_dir = scan_dir / "masks"
                mask_dir.mkdir(parents=True, exist_ok=True)
                for z in range(dims[0]):
                    _save_png(raw[z], scan_dir / f"slice_{z:04d}.png")
                    _save_png(lung[z].astype(np.uint8) * 255, mask_dir / f"lung_{z:04d}.png")
                    _save_png(
                        infection[z].astype(np.uint8) * 255, mask_dir / f"infection_{z:04d}.png"
                    )
                record.path = scan_dir
            records.append(record)

    manifest = DatasetManifest(records=records, source_path=str(root) if root else "")
    if root is not None:
        write_manifest(manifest, root / "manifest.csv")
        manifest.source_path = str(root / "manifest.csv")
    return manifest


def _normalize_u8(raw: np.ndarray) -> np.ndarray:
    # local import-free copy of data.normalize_slice semantics on uint8 input
    arr = raw.astype(np.float32)
    lo, hi = float(arr.min()), float(arr.max())
    if hi <= lo:
        return np.zeros_like(arr, dtype=np.float32)
    return ((arr - lo) / (hi - lo)).astype(np.float32)


def infection_fraction(lung_masks: np.ndarray, infection_masks: np.ndarray) -> float:
    """Infection-to-lung volume fraction, recomputed by voxel counting."""
    lung_count = int(np.count_nonzero(lung_masks))
    if lung_count == 0:
        return 0.0
    return int(np.count_nonzero(infection_masks)) / lung_count
