"""Voting-based recovery over column ablations.

One vote per band: the base model labels each ablated mutant, the winner is
the argmax with smallest-label-id tie-break, and the recovery certificate
demands a winner margin strictly greater than twice the overlap bound, so
no patch can flip the majority.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .classifier import Classifier
from .core import DimensionMismatchError, Sample
from .geometry import AblationSet, PatchSet, compute_delta


@dataclass(frozen=True)
class VoteTally:
    """Per-label vote counts over the ablated mutants of one sample."""

    counts: tuple[int, ...]
    winner: int
    runner_up_count: int

    @property
    def winner_count(self) -> int:
        return self.counts[self.winner]

    @property
    def margin(self) -> int:
        return self.winner_count - self.runner_up_count


@dataclass(eq=False)
class VotingContext:
    """A base model plus the ablation geometry it votes over."""

    f: Classifier
    bands: AblationSet
    delta: int
    band_keeps: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.band_keeps = self.bands.bit_stack()

    @classmethod
    def build(cls, f: Classifier, bands: AblationSet, patches: PatchSet) -> "VotingContext":
        return cls(f, bands, compute_delta(bands, patches))


def _check_dims(x: Sample, ctx: VotingContext):
    if (x.width, x.height) != (ctx.bands.width, ctx.bands.height):
        raise DimensionMismatchError(
            f"sample {x.width}x{x.height} does not match ablation frame "
            f"{ctx.bands.width}x{ctx.bands.height}"
        )


def band_votes_pixels(pixels: np.ndarray, ctx: VotingContext) -> np.ndarray:
    """One label per band, in band order."""
    mutants = kernels.apply_keeps(pixels, ctx.band_keeps)
    return ctx.f.classify_pixel_batch(mutants)


def tally_from_votes(votes: np.ndarray, label_count: int) -> VoteTally:
    counts = kernels.tally(votes, label_count)
    winner = int(counts.argmax())
    if label_count == 1:
        runner_up = 0
    else:
        rest = counts.copy()
        rest[winner] = -1
        runner_up = int(rest.max())
    return VoteTally(tuple(int(c) for c in counts), winner, runner_up)


def voting_tally(x: Sample, ctx: VotingContext) -> VoteTally:
    """Vote counts over all ablated mutants of x."""
    _check_dims(x, ctx)
    return tally_from_votes(band_votes_pixels(x.pixels, ctx), ctx.f.label_count)


def voting_predict(x: Sample, ctx: VotingContext) -> int:
    """Majority label; ties break to the smallest label id."""
    return voting_tally(x, ctx).winner


def voting_certify(x: Sample, ctx: VotingContext) -> bool:
    """True iff the winner's margin over the runner-up exceeds twice delta."""
    return voting_tally(x, ctx).margin > 2 * ctx.delta


def voting_warn(x: Sample) -> bool:
    """The voting defender never warns."""
    return False
