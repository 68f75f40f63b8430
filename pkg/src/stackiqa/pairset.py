"""Pairwise dataset model: manifest parsing, image loading, score cache.

A manifest is a CSV file with header ``pair_id,ref_path,a_path,b_path,p_a``
whose paths are interpreted relative to the manifest's own directory.  The
score cache is a CSV with header ``pair_id,side,metric_id,score`` meant to be
trivially writable from external scorers in any language.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image as _PILImage
from PIL import UnidentifiedImageError

from .errors import DataError

MANIFEST_HEADER = ["pair_id", "ref_path", "a_path", "b_path", "p_a"]
CACHE_HEADER = ["pair_id", "side", "metric_id", "score"]
SIDES = ("A", "B")

# Two cache inserts for the same key are treated as identical when they agree
# to within this tolerance; anything larger is a conflict.
CACHE_CONFLICT_TOL = 1e-9


class PreferenceLabel(Enum):
    PREFER_A = "A"
    PREFER_B = "B"
    TIE = "tie"


def label_from_p_a(p_a: float) -> PreferenceLabel:
    """Binarize an empirical preference probability at 0.5 (0.5 exactly -> Tie)."""
    if p_a > 0.5:
        return PreferenceLabel.PREFER_A
    if p_a < 0.5:
        return PreferenceLabel.PREFER_B
    return PreferenceLabel.TIE


@dataclass(frozen=True)
class PairRecord:
    """One comparison unit: reference O, candidates A and B, human preference."""

    pair_id: str
    ref_path: Path
    a_path: Path
    b_path: Path
    p_a: float

    @property
    def label(self) -> PreferenceLabel:
        return label_from_p_a(self.p_a)


@dataclass(frozen=True)
class Image:
    """Decoded 8-bit raster plus the derived real-valued luma plane.

    ``data`` is (height, width, channels) uint8 with channels 1 or 3; ``luma``
    is float64 (0.299R + 0.587G + 0.114B for color, identity for grayscale).
    """

    data: np.ndarray
    luma: np.ndarray = field(compare=False)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


def _luma_plane(data: np.ndarray) -> np.ndarray:
    if data.shape[2] == 1:
        return data[:, :, 0].astype(np.float64)
    r = data[:, :, 0].astype(np.float64)
    g = data[:, :, 1].astype(np.float64)
    b = data[:, :, 2].astype(np.float64)
    return 0.299 * r + 0.587 * g + 0.114 * b


def image_from_array(arr: np.ndarray) -> Image:
    """Wrap a (h, w), (h, w, 1) or (h, w, 3) uint8 array as an Image."""
    a = np.asarray(arr)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3 or a.shape[2] not in (1, 3):
        raise DataError(f"expected 1 or 3 channels, got array of shape {a.shape}")
    if a.shape[0] == 0 or a.shape[1] == 0:
        raise DataError("zero-dimension image")
    a = np.ascontiguousarray(a, dtype=np.uint8)
    return Image(data=a, luma=_luma_plane(a))


def load_image(path: str | os.PathLike) -> Image:
    """Decode a raster file (PNG, PPM/PGM, and anything else Pillow reads)."""
    path = Path(path)
    try:
        with _PILImage.open(path) as im:
            im.load()
            if im.mode == "L":
                arr = np.asarray(im)
            elif im.mode == "1":
                arr = np.asarray(im.convert("L"))
            else:
                arr = np.asarray(im.convert("RGB"))
    except FileNotFoundError:
        raise DataError(f"image file not found: {path}")
    except UnidentifiedImageError:
        raise DataError(f"unsupported or invalid image format: {path}")
    except Exception as exc:  # Pillow raises OSError/SyntaxError on truncation
        raise DataError(f"cannot decode image {path}: {exc}")
    if arr.ndim == 0 or arr.size == 0:
        raise DataError(f"zero-dimension image: {path}")
    return image_from_array(arr)


def load_pair_images(pair: PairRecord) -> tuple[Image, Image, Image]:
    """Load (O, A, B) for a pair and enforce identical pixel dimensions."""
    ref = load_image(pair.ref_path)
    a = load_image(pair.a_path)
    b = load_image(pair.b_path)
    for name, img in (("A", a), ("B", b)):
        if (img.height, img.width) != (ref.height, ref.width):
            raise DataError(
                f"pair {pair.pair_id}: candidate {name} is "
                f"{img.width}x{img.height} but reference is "
                f"{ref.width}x{ref.height}"
            )
    return ref, a, b


def load_manifest(path: str | os.PathLike) -> list[PairRecord]:
    """Parse a manifest CSV into PairRecords, preserving row order."""
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}")
    if not rows:
        raise DataError(f"manifest {path} is empty")
    if rows[0] != MANIFEST_HEADER:
        raise DataError(
            f"manifest {path} row 1: header must be "
            f"{','.join(MANIFEST_HEADER)!r}, got {','.join(rows[0])!r}"
        )
    base = path.parent
    records: list[PairRecord] = []
    seen: dict[str, int] = {}
    for rownum, row in enumerate(rows[1:], start=2):
        if len(row) != len(MANIFEST_HEADER):
            raise DataError(
                f"manifest {path} row {rownum}: expected "
                f"{len(MANIFEST_HEADER)} columns, got {len(row)}"
            )
        pair_id, ref_raw, a_raw, b_raw, p_a_raw = row
        if not pair_id:
            raise DataError(f"manifest {path} row {rownum}: empty pair_id")
        if pair_id in seen:
            raise DataError(
                f"manifest {path} row {rownum}: duplicate pair_id "
                f"{pair_id!r} (first seen on row {seen[pair_id]})"
            )
        seen[pair_id] = rownum
        try:
            p_a = float(p_a_raw)
        except ValueError:
            raise DataError(
                f"manifest {path} row {rownum}: p_a {p_a_raw!r} is not a number"
            )
        if not (0.0 <= p_a <= 1.0) or math.isnan(p_a):
            raise DataError(
                f"manifest {path} row {rownum}: p_a {p_a_raw} outside [0, 1]"
            )
        records.append(
            PairRecord(
                pair_id=pair_id,
                ref_path=Path(os.path.normpath(base / ref_raw)),
                a_path=Path(os.path.normpath(base / a_raw)),
                b_path=Path(os.path.normpath(base / b_raw)),
                p_a=p_a,
            )
        )
    return records


def save_manifest(records: list[PairRecord], path: str | os.PathLike) -> None:
    """Write a manifest CSV; paths are stored relative to the output directory."""
    path = Path(path)
    base = path.parent
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_HEADER)
        for rec in records:
            w.writerow(
                [
                    rec.pair_id,
                    os.path.relpath(rec.ref_path, base),
                    os.path.relpath(rec.a_path, base),
                    os.path.relpath(rec.b_path, base),
                    repr(rec.p_a),
                ]
            )


def _format_score(score: float) -> str:
    # repr round-trips float64 exactly and renders infinity as 'inf'
    return repr(float(score))


class ScoreCache:
    """Map (pair_id, side, metric_id) -> score, with conflict detection.

    Reads are safe from many threads; mutation is meant to go through a single
    writer, matching the single-writer on-disk contract.
    """

    def __init__(self) -> None:
        self._entries: dict[tuple[str, str, str], float] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: tuple[str, str, str]) -> bool:
        return key in self._entries

    def put(self, pair_id: str, side: str, metric_id: str, score: float) -> None:
        if side not in SIDES:
            raise DataError(f"side must be one of {SIDES}, got {side!r}")
        score = float(score)
        if math.isnan(score):
            raise DataError(
                f"refusing to cache NaN score for ({pair_id}, {side}, {metric_id})"
            )
        key = (pair_id, side, metric_id)
        if key in self._entries:
            old = self._entries[key]
            if old == score or abs(old - score) <= CACHE_CONFLICT_TOL:
                return
            raise DataError(
                f"conflicting score for ({pair_id}, {side}, {metric_id}): "
                f"cached {old!r}, new {score!r}"
            )
        self._entries[key] = score

    def get(self, pair_id: str, side: str, metric_id: str) -> float | None:
        if side not in SIDES:
            raise DataError(f"side must be one of {SIDES}, got {side!r}")
        return self._entries.get((pair_id, side, metric_id))

    def items(self):
        return self._entries.items()

    def save(self, path: str | os.PathLike) -> None:
        """Write all entries, sorted by key, so saves are byte-deterministic."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CACHE_HEADER)
            for (pair_id, side, metric_id), score in sorted(self._entries.items()):
                w.writerow([pair_id, side, metric_id, _format_score(score)])

    def ingest_file(self, path: str | os.PathLike) -> int:
        """Merge a score CSV into this cache; returns the number of new entries.

        Re-ingesting identical rows is a no-op; a differing score for an
        existing key is rejected with its row number.
        """
        path = Path(path)
        try:
            with open(path, newline="", encoding="utf-8") as fh:
                rows = list(csv.reader(fh))
        except OSError as exc:
            raise DataError(f"cannot read score file {path}: {exc}")
        if not rows or rows[0] != CACHE_HEADER:
            raise DataError(
                f"score file {path}: header must be {','.join(CACHE_HEADER)!r}"
            )
        before = len(self._entries)
        for rownum, row in enumerate(rows[1:], start=2):
            if len(row) != len(CACHE_HEADER):
                raise DataError(
                    f"score file {path} row {rownum}: expected "
                    f"{len(CACHE_HEADER)} columns, got {len(row)}"
                )
            pair_id, side, metric_id, score_raw = row
            if side not in SIDES:
                raise DataError(
                    f"score file {path} row {rownum}: side must be A or B, "
                    f"got {side!r}"
                )
            try:
                score = float(score_raw)
            except ValueError:
                raise DataError(
                    f"score file {path} row {rownum}: score {score_raw!r} "
                    "is not a number"
                )
            try:
                self.put(pair_id, side, metric_id, score)
            except DataError as exc:
                raise DataError(f"score file {path} row {rownum}: {exc}")
        return len(self._entries) - before

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ScoreCache":
        cache = cls()
        cache.ingest_file(path)
        return cache

    @classmethod
    def load_or_empty(cls, path: str | os.PathLike) -> "ScoreCache":
        if Path(path).exists():
            return cls.load(path)
        return cls()
