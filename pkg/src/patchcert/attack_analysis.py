"""Necessary attack conditions for both defenders and the attack-set algebra.

For each defender, a silent label flip is only possible for (patch, target)
pairs satisfying its necessary condition; everything else is excluded by a
worst-case argument.  The full candidate sets, expanded with the benign
(patch, current label) pairs, drive the cross-checking detection
certificate: if the two defenders share no malicious candidate, they can
never make the same mistake silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import BinaryRegion, ConfigError
from .geometry import PatchSet, bands_overlapping
from .masking import MaskingContext, double_masked_votes
from .voting import VotingContext, band_votes_pixels
from .core import Sample


@dataclass(frozen=True, order=True)
class AttackConfiguration:
    """A patch placement (index into the patch set) and an intended label."""

    patch_index: int
    target: int


@dataclass(frozen=True, eq=False)
class AttackSet:
    """All attack configurations a defender cannot rule out, plus the benign pairs."""

    owner: str  # "R1" (masking) or "R2" (voting)
    members: frozenset[AttackConfiguration]

    def __contains__(self, item):
        return item in self.members

    def __len__(self):
        return len(self.members)

    def sorted_pairs(self) -> list[tuple[int, int]]:
        return sorted((c.patch_index, c.target) for c in self.members)


@dataclass(eq=False)
class DefenderSetup:
    """Shared context: both base defenders plus the patch threat geometry."""

    masking: MaskingContext
    voting: VotingContext
    patches: PatchSet
    patch_stack: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.patch_stack = self.patches.bit_stack()


def masking_attack_condition(x: Sample, patch: BinaryRegion, target: int,
                             ctx: MaskingContext, g1_of_x: int) -> bool:
    """Necessary condition for the masking defender to output target silently.

    True iff some ordered mask pair (equal masks allowed) jointly covers the
    patch and the benign sample's two-mask vote under that pair is target,
    with target different from the defender's benign label.
    """
    if target == g1_of_x:
        return False
    table = double_masked_votes(x, ctx).reshape(-1)
    covered = kernels.containment(patch.bits[None, :], ctx.pair_unions)[0]
    return bool(np.any(covered & (table == target)))


def voting_attack_condition(x: Sample, patch: BinaryRegion, target: int,
                            ctx: VotingContext, g2_of_x: int) -> bool:
    """Necessary condition for the voting defender to output target.

    Counts votes of bands that do not overlap the patch: the target's outside
    votes plus every overlapping band (all capturable in the worst case) must
    reach the benign label's outside votes.
    """
    votes = band_votes_pixels(x.pixels, ctx)
    overlap = bands_overlapping(ctx.bands, patch)
    outside = ~overlap
    target_outside = int(np.count_nonzero(outside & (votes == target)))
    benign_outside = int(np.count_nonzero(outside & (votes == g2_of_x)))
    return target_outside + int(np.count_nonzero(overlap)) >= benign_outside


def build_att_set(x: Sample, owner: str, setup: DefenderSetup, g_of_x: int) -> AttackSet:
    """Candidate (patch, target) pairs for one defender, benign pairs included."""
    if owner == "R1":
        members = _masking_candidates(x, setup, g_of_x)
    elif owner == "R2":
        members = _voting_candidates(x, setup, g_of_x)
    else:
        raise ConfigError(f"attack set owner must be 'R1' or 'R2', got {owner!r}")
    members.update(
        AttackConfiguration(i, g_of_x) for i in range(len(setup.patches))
    )
    return AttackSet(owner, frozenset(members))


def _masking_candidates(x: Sample, setup: DefenderSetup, g1_of_x: int) -> set[AttackConfiguration]:
    ctx = setup.masking
    table = double_masked_votes(x, ctx).reshape(-1)
    deviant = table != g1_of_x
    out: set[AttackConfiguration] = set()
    if not deviant.any():
        return out
    # containment of each patch in each deviant pair union, all at once
    covered = kernels.containment(setup.patch_stack, ctx.pair_unions[deviant])
    deviant_labels = table[deviant]
    for p_idx in range(covered.shape[0]):
        for label in np.unique(deviant_labels[covered[p_idx]]):
            out.add(AttackConfiguration(p_idx, int(label)))
    return out


def _voting_candidates(x: Sample, setup: DefenderSetup, g2_of_x: int) -> set[AttackConfiguration]:
    ctx = setup.voting
    votes = band_votes_pixels(x.pixels, ctx)
    label_count = ctx.f.label_count
    overlap_matrix = (setup.patch_stack.astype(np.int64) @ ctx.band_keeps.astype(np.int64).T) > 0
    out: set[AttackConfiguration] = set()
    for p_idx in range(overlap_matrix.shape[0]):
        overlap = overlap_matrix[p_idx]
        outside_votes = votes[~overlap]
        counts = kernels.tally(outside_votes, label_count)
        benign_outside = int(counts[g2_of_x])
        captured = int(np.count_nonzero(overlap))
        for target in range(label_count):
            if target == g2_of_x:
                continue
            if int(counts[target]) + captured >= benign_outside:
                out.add(AttackConfiguration(p_idx, target))
    return out


def att_intersection_ok(s1: AttackSet, s2: AttackSet, g1_of_x: int) -> bool:
    """True iff the sets share nothing, or share only pairs targeting the benign label."""
    common = s1.members & s2.members
    return all(c.target == g1_of_x for c in common)
