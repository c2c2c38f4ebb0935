"""Masking-based recovery: two-round double-masking prediction and its
agreement certificate.

Two prediction variants share the same query substrate.  The original
variant runs its second round only over the first-round minority masks and
never warns; the revised variant scans every mask in the second round and
raises a warning whenever it falls back to the first-round majority
(Case III).  The recovery certificate is double-mask agreement: one label
across all ordered mask pairs.

Cases: I = all first-round mutants agree; II = some second round reaches
consensus; III = majority fallback.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .classifier import Classifier
from .core import DimensionMismatchError, Sample
from .geometry import MaskSet

CASE_AGREED = "I"
CASE_DISAGREED = "II"
CASE_MAJORITY = "III"


@dataclass(frozen=True)
class MaskingOutcome:
    """Prediction result: label, warning flag, exit case, and its witness.

    witness is None for Case I, the consensus mask index for Case II (first
    in mask-set order), and for Case III a tuple of (mask index, first
    disagreeing second-round mask index) pairs, one per scanned mask.
    """

    label: int
    warning: bool
    case_tag: str
    witness: object = None


@dataclass(eq=False)
class MaskingContext:
    """A base model plus the covering mask set it is queried through.

    Precomputes the keep-regions (complement of each mask and of each
    ordered mask pair) and the pair unions used by the attack analysis.
    """

    h: Classifier
    masks: MaskSet
    first_keeps: np.ndarray = field(init=False, repr=False)
    pair_keeps: np.ndarray = field(init=False, repr=False)
    pair_unions: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        stack = self.masks.bit_stack()
        m = stack.shape[0]
        self.first_keeps = (1 - stack).astype(np.uint8)
        unions = np.maximum(stack[:, None, :], stack[None, :, :])
        self.pair_unions = unions.reshape(m * m, -1).astype(np.uint8)
        self.pair_keeps = (1 - self.pair_unions).astype(np.uint8)

    @property
    def mask_count(self) -> int:
        return len(self.masks)


def _check_dims(x: Sample, ctx: MaskingContext):
    if (x.width, x.height) != (ctx.masks.width, ctx.masks.height):
        raise DimensionMismatchError(
            f"sample {x.width}x{x.height} does not match mask frame "
            f"{ctx.masks.width}x{ctx.masks.height}"
        )


class MaskQueries:
    """Lazy per-sample view of the one-mask and two-mask classifier votes."""

    def __init__(self, pixels: np.ndarray, ctx: MaskingContext):
        self.pixels = pixels
        self.ctx = ctx
        self._first = None
        self._rows: dict[int, np.ndarray] = {}

    def first_labels(self) -> np.ndarray:
        if self._first is None:
            mutants = kernels.apply_keeps(self.pixels, self.ctx.first_keeps)
            self._first = self.ctx.h.classify_pixel_batch(mutants)
        return self._first

    def second_row(self, i: int) -> np.ndarray:
        row = self._rows.get(i)
        if row is None:
            m = self.ctx.mask_count
            keeps = self.ctx.pair_keeps[i * m:(i + 1) * m]
            mutants = kernels.apply_keeps(self.pixels, keeps)
            row = self.ctx.h.classify_pixel_batch(mutants)
            self._rows[i] = row
        return row

    def full_table(self) -> np.ndarray:
        m = self.ctx.mask_count
        mutants = kernels.apply_keeps(self.pixels, self.ctx.pair_keeps)
        return self.ctx.h.classify_pixel_batch(mutants).reshape(m, m)


def _majority(labels: np.ndarray, label_count: int) -> int:
    return int(kernels.tally(labels, label_count).argmax())


def predict_from_queries(queries: MaskQueries, scan_all: bool,
                         warn_on_majority: bool) -> MaskingOutcome:
    """The two-round prediction over a query substrate.

    scan_all selects whether the second round ranges over every mask or only
    the first-round minority; warn_on_majority controls the Case III flag.
    """
    ctx = queries.ctx
    first = queries.first_labels()
    y_maj = _majority(first, ctx.h.label_count)
    minority = np.flatnonzero(first != y_maj)
    if minority.size == 0:
        return MaskingOutcome(y_maj, False, CASE_AGREED, None)
    scan = range(ctx.mask_count) if scan_all else (int(i) for i in minority)
    disagreements = []
    for i in scan:
        row = queries.second_row(i)
        y2 = _majority(row, ctx.h.label_count)
        bad = np.flatnonzero(row != y2)
        if bad.size == 0:
            return MaskingOutcome(y2, False, CASE_DISAGREED, i)
        disagreements.append((i, int(bad[0])))
    return MaskingOutcome(y_maj, warn_on_majority, CASE_MAJORITY, tuple(disagreements))


def predict_original(x: Sample, ctx: MaskingContext) -> MaskingOutcome:
    """Double-masking prediction, second round over minority masks only; never warns."""
    _check_dims(x, ctx)
    return predict_from_queries(MaskQueries(x.pixels, ctx), scan_all=False,
                                warn_on_majority=False)


def predict_revised(x: Sample, ctx: MaskingContext) -> MaskingOutcome:
    """Double-masking prediction, second round over every mask; warns on Case III."""
    _check_dims(x, ctx)
    return predict_from_queries(MaskQueries(x.pixels, ctx), scan_all=True,
                                warn_on_majority=True)


def predict_both_pixels(pixels: np.ndarray, ctx: MaskingContext) -> tuple[MaskingOutcome, MaskingOutcome]:
    """(original, revised) outcomes sharing one query substrate."""
    queries = MaskQueries(pixels, ctx)
    original = predict_from_queries(queries, scan_all=False, warn_on_majority=False)
    revised = predict_from_queries(queries, scan_all=True, warn_on_majority=True)
    return original, revised


def double_masked_votes(x: Sample, ctx: MaskingContext) -> np.ndarray:
    """The full ordered-pair vote table: entry [i, j] labels (J - m_i - m_j) ⊙ x."""
    _check_dims(x, ctx)
    return MaskQueries(x.pixels, ctx).full_table()


def double_mask_agreement(x: Sample, ctx: MaskingContext) -> bool:
    """Recovery certificate: every ordered two-mask mutant gets one label."""
    table = double_masked_votes(x, ctx)
    return bool((table == table.flat[0]).all())
