"""Deliberately broken defender variants for validating the validators.

Each mutation plants one specific defect; the oracle suite must flag at
least one violation on the matching fixture, proving the exhaustive checks
are not vacuous.  Never wire these into a production run.
"""

from __future__ import annotations

import numpy as np

from .core import BinaryRegion, Sample
from .cross_check import Overrides
from .geometry import bands_overlapping
from .masking import MaskQueries, MaskingContext, MaskingOutcome, predict_from_queries
from .voting import VotingContext, band_votes_pixels


def predict_revised_skip_warning(x: Sample, ctx: MaskingContext) -> MaskingOutcome:
    """Mutation: the revised prediction forgets to warn on its majority fallback."""
    return predict_from_queries(MaskQueries(x.pixels, ctx), scan_all=True,
                                warn_on_majority=False)


def predict_revised_minority_scan(x: Sample, ctx: MaskingContext) -> MaskingOutcome:
    """Mutation: the revised prediction scans only the first-round minority masks."""
    return predict_from_queries(MaskQueries(x.pixels, ctx), scan_all=False,
                                warn_on_majority=True)


def nac_voting_drop_capture(x: Sample, patch: BinaryRegion, target: int,
                            ctx: VotingContext, g2_of_x: int) -> bool:
    """Mutation: the voting attack condition forgets the capturable overlap votes."""
    votes = band_votes_pixels(x.pixels, ctx)
    overlap = bands_overlapping(ctx.bands, patch)
    outside = ~overlap
    target_outside = int(np.count_nonzero(outside & (votes == target)))
    benign_outside = int(np.count_nonzero(outside & (votes == g2_of_x)))
    return target_outside >= benign_outside


def nac_voting_strict(x: Sample, patch: BinaryRegion, target: int,
                      ctx: VotingContext, g2_of_x: int) -> bool:
    """Mutation: the voting attack condition uses a strict inequality."""
    votes = band_votes_pixels(x.pixels, ctx)
    overlap = bands_overlapping(ctx.bands, patch)
    outside = ~overlap
    target_outside = int(np.count_nonzero(outside & (votes == target)))
    benign_outside = int(np.count_nonzero(outside & (votes == g2_of_x)))
    return target_outside + int(np.count_nonzero(overlap)) > benign_outside


MUTATIONS: dict[str, Overrides] = {
    "drop-capture-term": Overrides(nac_voting=nac_voting_drop_capture),
    "strict-inequality": Overrides(nac_voting=nac_voting_strict),
    "skip-case3-warning": Overrides(predict_revised=predict_revised_skip_warning),
    "minority-scan": Overrides(predict_revised=predict_revised_minority_scan),
}
