"""Samples, binary regions, their elementwise algebra, and the on-disk formats.

Pixel domain is a small integer alphabet 0..A where 0 is the reserved
"removed" sentinel: applying a region to a sample zeroes everything the
region drops, so removal composes by plain elementwise multiplication.
All values here are immutable after construction and safe to share across
workers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

PIXEL_DTYPE = np.int64
BIT_DTYPE = np.uint8

#: Labels are plain non-negative ints; the enclosing task bounds them.
Label = int


class PatchCertError(Exception):
    """Base class for all engine errors."""


class DimensionMismatchError(PatchCertError):
    """Two values with incompatible width/height were combined."""


class FormatError(PatchCertError):
    """A dataset or fixture file violates its format; message names file and line."""


class GeometryError(PatchCertError):
    """Geometry parameters are out of range or yield a non-covering mask set."""


class BudgetExceededError(PatchCertError):
    """An exhaustive enumeration would exceed the configured budget."""


class ConfigError(PatchCertError):
    """A run configuration is invalid."""


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Sample:
    """A width x height grid of pixel values in [0, alphabet_size].

    ``pixels`` is the row-major flat array; it is read-only.
    """

    width: int
    height: int
    pixels: np.ndarray
    alphabet_size: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise FormatError(f"sample dimensions must be positive, got {self.width}x{self.height}")
        if self.alphabet_size < 1:
            raise FormatError(f"alphabet size must be >= 1, got {self.alphabet_size}")
        arr = _frozen_array(self.pixels, PIXEL_DTYPE)
        if arr.ndim != 1 or arr.size != self.width * self.height:
            raise DimensionMismatchError(
                f"expected {self.width * self.height} pixels, got array of shape {arr.shape}"
            )
        if arr.size and (arr.min() < 0 or arr.max() > self.alphabet_size):
            raise FormatError(
                f"pixel values must lie in [0, {self.alphabet_size}], got range "
                f"[{arr.min()}, {arr.max()}]"
            )
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def from_rows(cls, rows, alphabet_size: int) -> "Sample":
        """Build a sample from a list of equal-length pixel rows."""
        height = len(rows)
        if height == 0:
            raise FormatError("a sample needs at least one row")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise FormatError("all sample rows must have equal length")
        flat = [v for row in rows for v in row]
        return cls(width=width, height=height, pixels=np.array(flat), alphabet_size=alphabet_size)

    def grid(self) -> np.ndarray:
        """Row-major 2D view of the pixels."""
        return self.pixels.reshape(self.height, self.width)

    def key(self) -> bytes:
        """Canonical byte encoding of the pixel content."""
        return self.pixels.tobytes()

    def with_pixels(self, pixels: np.ndarray) -> "Sample":
        return Sample(self.width, self.height, pixels, self.alphabet_size)


@dataclass(frozen=True, eq=False)
class BinaryRegion:
    """A width x height bit matrix; 1 marks cells inside the region."""

    width: int
    height: int
    bits: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.bits, BIT_DTYPE)
        if arr.ndim != 1 or arr.size != self.width * self.height:
            raise DimensionMismatchError(
                f"expected {self.width * self.height} bits, got array of shape {arr.shape}"
            )
        if arr.size and arr.max() > 1:
            raise FormatError("region bits must be 0 or 1")
        object.__setattr__(self, "bits", arr)

    @classmethod
    def full(cls, width: int, height: int) -> "BinaryRegion":
        """The all-ones region (keeps everything)."""
        return cls(width, height, np.ones(width * height, dtype=BIT_DTYPE))

    @classmethod
    def empty(cls, width: int, height: int) -> "BinaryRegion":
        """The all-zeros region (keeps nothing)."""
        return cls(width, height, np.zeros(width * height, dtype=BIT_DTYPE))

    @classmethod
    def from_rect(cls, width: int, height: int, top: int, left: int,
                  rect_height: int, rect_width: int) -> "BinaryRegion":
        """Axis-aligned rectangle fully inside the frame."""
        if not (0 <= top and 0 <= left and top + rect_height <= height and left + rect_width <= width):
            raise GeometryError(
                f"rectangle {rect_height}x{rect_width} at ({top},{left}) exceeds frame {width}x{height}"
            )
        grid = np.zeros((height, width), dtype=BIT_DTYPE)
        grid[top:top + rect_height, left:left + rect_width] = 1
        return cls(width, height, grid.reshape(-1))

    @classmethod
    def from_columns(cls, width: int, height: int, columns) -> "BinaryRegion":
        """Region keeping the given full-height columns."""
        grid = np.zeros((height, width), dtype=BIT_DTYPE)
        for c in columns:
            grid[:, c % width] = 1
        return cls(width, height, grid.reshape(-1))

    def grid(self) -> np.ndarray:
        return self.bits.reshape(self.height, self.width)

    def popcount(self) -> int:
        return int(self.bits.sum())

    def cell_indices(self) -> np.ndarray:
        """Flat indices of set cells, row-major order."""
        return np.flatnonzero(self.bits)


def _check_same_dims(a, b):
    if a.width != b.width or a.height != b.height:
        raise DimensionMismatchError(
            f"dimension mismatch: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def region_add(u: BinaryRegion, v: BinaryRegion) -> BinaryRegion:
    """Elementwise max of two regions (their union)."""
    _check_same_dims(u, v)
    return BinaryRegion(u.width, u.height, np.maximum(u.bits, v.bits))


def region_sub(u: BinaryRegion, v: BinaryRegion) -> BinaryRegion:
    """u minus v where u is set, else 0; for bit matrices this is u AND NOT v."""
    _check_same_dims(u, v)
    return BinaryRegion(u.width, u.height, u.bits & (1 - v.bits))


def region_mul(u: BinaryRegion, v: BinaryRegion) -> BinaryRegion:
    """Elementwise product (intersection)."""
    _check_same_dims(u, v)
    return BinaryRegion(u.width, u.height, u.bits * v.bits)


def region_contains(outer: BinaryRegion, inner: BinaryRegion) -> bool:
    """True iff inner ⊙ outer = inner, i.e. every set cell of inner is set in outer."""
    _check_same_dims(outer, inner)
    return not bool((inner.bits & (1 - outer.bits)).any())


def apply_region(x: Sample, r: BinaryRegion) -> Sample:
    """Keep pixels where the region is set; drop the rest to the 0 sentinel."""
    _check_same_dims(x, r)
    return x.with_pixels(x.pixels * r.bits)


def overwrite_patch(x: Sample, p: BinaryRegion, content) -> Sample:
    """Replace the pixels inside region p with the given content values.

    ``content`` lists the new values for p's set cells in row-major order and
    must match the region's popcount; values must stay within the sample's
    alphabet (the 0 sentinel is allowed: an attacker may write anything).
    """
    _check_same_dims(x, p)
    cells = p.cell_indices()
    content = np.asarray(list(content), dtype=PIXEL_DTYPE)
    if content.size != cells.size:
        raise FormatError(
            f"content length {content.size} does not match patch size {cells.size}"
        )
    if content.size and (content.min() < 0 or content.max() > x.alphabet_size):
        raise FormatError(
            f"content values must lie in [0, {x.alphabet_size}]"
        )
    pixels = x.pixels.copy()
    pixels[cells] = content
    return x.with_pixels(pixels)


# ---------------------------------------------------------------------------
# Simple Grid Format (SGF)
#
# One sample per file: line 1 is "w h A" (ASCII decimal, space separated),
# lines 2..h+1 hold w space-separated integers in [0, A]; a trailing newline
# is required and comments are not allowed.  A dataset is a directory of
# .sgf files plus a labels.csv with header "file,label".
# ---------------------------------------------------------------------------

def load_sample(path, allow_zero: bool = False) -> Sample:
    """Parse one SGF file; errors name the file and line."""
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii")
    except OSError as exc:
        raise FormatError(f"{path}: cannot read: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not ASCII: {exc}") from exc
    if not text.endswith("\n"):
        raise FormatError(f"{path}: missing required trailing newline")
    lines = text.split("\n")[:-1]
    if not lines:
        raise FormatError(f"{path}:1: empty file")
    header = lines[0].split(" ")
    if len(header) != 3:
        raise FormatError(f"{path}:1: header must be 'w h A', got {lines[0]!r}")
    try:
        width, height, alphabet = (int(tok) for tok in header)
    except ValueError:
        raise FormatError(f"{path}:1: header fields must be decimal integers") from None
    if width < 1 or height < 1 or alphabet < 1:
        raise FormatError(f"{path}:1: header values must be positive")
    if len(lines) != height + 1:
        raise FormatError(
            f"{path}: expected {height} pixel rows after the header, got {len(lines) - 1}"
        )
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        toks = line.split(" ")
        if len(toks) != width:
            raise FormatError(f"{path}:{i}: expected {width} values, got {len(toks)}")
        try:
            row = [int(t) for t in toks]
        except ValueError:
            raise FormatError(f"{path}:{i}: pixel values must be decimal integers") from None
        for v in row:
            if v < 0 or v > alphabet:
                raise FormatError(f"{path}:{i}: pixel value {v} outside [0, {alphabet}]")
            if v == 0 and not allow_zero:
                raise FormatError(
                    f"{path}:{i}: sentinel pixel 0 not permitted in a benign dataset sample"
                )
        rows.append(row)
    return Sample.from_rows(rows, alphabet)


def save_sample(path, sample: Sample) -> None:
    """Write one sample in SGF."""
    grid = sample.grid()
    lines = [f"{sample.width} {sample.height} {sample.alphabet_size}"]
    lines.extend(" ".join(str(int(v)) for v in row) for row in grid)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_dataset(path, allow_zero: bool = False) -> list[tuple[str, Sample, Label]]:
    """Load a dataset directory: (file name, sample, label) per entry.

    Ordering is lexicographic by sample file name; all samples must share
    dimensions and alphabet, and the labels file must cover exactly the
    directory's .sgf files.
    """
    root = Path(path)
    if not root.is_dir():
        raise FormatError(f"{root}: not a directory")
    labels_path = root / "labels.csv"
    if not labels_path.is_file():
        raise FormatError(f"{labels_path}: missing labels file")
    labels: dict[str, int] = {}
    with labels_path.open(newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["file", "label"]:
            raise FormatError(f"{labels_path}:1: header must be 'file,label'")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise FormatError(f"{labels_path}:{line_no}: expected 'file,label'")
            name, label_text = row
            try:
                label = int(label_text)
            except ValueError:
                raise FormatError(f"{labels_path}:{line_no}: label must be an integer") from None
            if label < 0:
                raise FormatError(f"{labels_path}:{line_no}: label must be non-negative")
            if name in labels:
                raise FormatError(f"{labels_path}:{line_no}: duplicate entry for {name}")
            if not (root / name).is_file():
                raise FormatError(f"{labels_path}:{line_no}: no such sample file {name}")
            labels[name] = label
    files = sorted(p.name for p in root.glob("*.sgf"))
    entries = []
    for name in files:
        if name not in labels:
            raise FormatError(f"{labels_path}: missing label for {name}")
        entries.append((name, load_sample(root / name, allow_zero=allow_zero), labels[name]))
    extra = set(labels) - set(files)
    if extra:
        raise FormatError(f"{labels_path}: labels for unknown files: {sorted(extra)}")
    if entries:
        w, h, a = entries[0][1].width, entries[0][1].height, entries[0][1].alphabet_size
        for name, sample, _ in entries:
            if (sample.width, sample.height, sample.alphabet_size) != (w, h, a):
                raise FormatError(
                    f"{root / name}: dimensions/alphabet differ from the rest of the dataset"
                )
    return entries
