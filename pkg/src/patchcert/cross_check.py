"""The composed defenders built by cross-checking the two base recoveries.

Two compositions share the prediction principle (output the masking
defender's recovered label) and the same unwavering certificate, but differ
in prediction variant and detection certificate:

* ``cc-base``: masking prediction is the original variant; a warning is
  raised only when the two base labels disagree; the detection certificate
  is the disjunction "masking certificate holds, or voting certificate
  holds and the labels agree".
* ``cc``: masking prediction is the revised variant (which warns on its
  majority fallback); the warning adds both base warnings; the detection
  certificate checks that the two defenders' candidate attack sets share
  no malicious configuration.

Certificate flags per record: c_u (label preserved and silent under any
in-scope patch), c_d (any label flip triggers a warning), c_r (label
preserved).  c_u implies c_d by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .attack_analysis import (
    AttackSet,
    DefenderSetup,
    att_intersection_ok,
    build_att_set,
    masking_attack_condition,
    voting_attack_condition,
)
from .core import BinaryRegion, Sample
from .masking import (
    MaskingContext,
    MaskingOutcome,
    predict_original,
    predict_revised,
)
from .voting import VotingContext, voting_certify, voting_predict


@dataclass(eq=False)
class Overrides:
    """Injectable replacements for defender pieces; used by mutation testing."""

    predict_original: Optional[Callable[[Sample, MaskingContext], MaskingOutcome]] = None
    predict_revised: Optional[Callable[[Sample, MaskingContext], MaskingOutcome]] = None
    nac_masking: Optional[Callable[[Sample, BinaryRegion, int, MaskingContext, int], bool]] = None
    nac_voting: Optional[Callable[[Sample, BinaryRegion, int, VotingContext, int], bool]] = None

    def original_fn(self):
        return self.predict_original or predict_original

    def revised_fn(self):
        return self.predict_revised or predict_revised

    def nac_masking_fn(self):
        return self.nac_masking or masking_attack_condition

    def nac_voting_fn(self):
        return self.nac_voting or voting_attack_condition


_DEFAULTS = Overrides()


@dataclass(frozen=True)
class CertificateRecord:
    """Per-sample certification outcome with enough provenance to audit it."""

    sample_id: str
    defender: str  # "cc" | "cc-base"
    g: int
    v: bool
    c_u: bool
    c_d: bool
    c_r: bool
    provenance: str
    g1: int
    g2: int
    c1: bool
    c2: bool
    case_alg1: str
    case_alg2: str
    att_r1: Optional[tuple[tuple[int, int], ...]] = None
    att_r2: Optional[tuple[tuple[int, int], ...]] = None


def cc_predict(x: Sample, setup: DefenderSetup,
               overrides: Overrides = _DEFAULTS) -> tuple[int, bool]:
    """Label and warning of the cross-checking defender (revised masking)."""
    r1 = overrides.revised_fn()(x, setup.masking)
    g2 = voting_predict(x, setup.voting)
    # the voting defender's own warning is always False
    return r1.label, (r1.label != g2) or r1.warning


def cc_base_predict(x: Sample, setup: DefenderSetup,
                    overrides: Overrides = _DEFAULTS) -> tuple[int, bool]:
    """Label and warning of the base composition (original masking)."""
    r1 = overrides.original_fn()(x, setup.masking)
    g2 = voting_predict(x, setup.voting)
    return r1.label, r1.label != g2


def _att_set_with_override(x, owner, setup, g_of_x, condition) -> AttackSet:
    if condition is None:
        return build_att_set(x, owner, setup, g_of_x)
    from .attack_analysis import AttackConfiguration  # local to avoid clutter above

    ctx = setup.masking if owner == "R1" else setup.voting
    label_count = ctx.h.label_count if owner == "R1" else ctx.f.label_count
    members = set()
    for p_idx, patch in enumerate(setup.patches.regions):
        for target in range(label_count):
            if condition(x, patch, target, ctx, g_of_x):
                members.add(AttackConfiguration(p_idx, target))
        members.add(AttackConfiguration(p_idx, g_of_x))
    return AttackSet(owner, frozenset(members))


def cc_certify(x: Sample, setup: DefenderSetup, sample_id: str = "",
               overrides: Overrides = _DEFAULTS) -> CertificateRecord:
    """Full certification under the cross-checking defender."""
    from .masking import double_mask_agreement

    r1r = overrides.revised_fn()(x, setup.masking)
    r1o = overrides.original_fn()(x, setup.masking)
    g1 = r1r.label
    g2 = voting_predict(x, setup.voting)
    c1 = double_mask_agreement(x, setup.masking)
    c2 = voting_certify(x, setup.voting)
    att1 = _att_set_with_override(x, "R1", setup, g1, overrides.nac_masking)
    att2 = _att_set_with_override(x, "R2", setup, g2, overrides.nac_voting)
    c_d = att_intersection_ok(att1, att2, g1)
    common = att1.members & att2.members
    if c_d:
        provenance = "att-empty" if not common else "att-all-benign"
    else:
        provenance = "none"
    c_u = (g1 == g2) and c1 and c2
    v = (g1 != g2) or r1r.warning
    return CertificateRecord(
        sample_id=sample_id,
        defender="cc",
        g=g1,
        v=v,
        c_u=c_u,
        c_d=c_d,
        c_r=c1,
        provenance=provenance,
        g1=g1,
        g2=g2,
        c1=c1,
        c2=c2,
        case_alg1=r1o.case_tag,
        case_alg2=r1r.case_tag,
        att_r1=tuple(att1.sorted_pairs()),
        att_r2=tuple(att2.sorted_pairs()),
    )


def cc_base_certify(x: Sample, setup: DefenderSetup, sample_id: str = "",
                    overrides: Overrides = _DEFAULTS) -> CertificateRecord:
    """Full certification under the base composition."""
    from .masking import double_mask_agreement

    r1o = overrides.original_fn()(x, setup.masking)
    r1r = overrides.revised_fn()(x, setup.masking)
    g1 = r1o.label
    g2 = voting_predict(x, setup.voting)
    c1 = double_mask_agreement(x, setup.masking)
    c2 = voting_certify(x, setup.voting)
    c_d = c1 or (c2 and g1 == g2)
    if c1:
        provenance = "base-c1"
    elif c2 and g1 == g2:
        provenance = "base-c2&agree"
    else:
        provenance = "none"
    c_u = (g1 == g2) and c1 and c2
    return CertificateRecord(
        sample_id=sample_id,
        defender="cc-base",
        g=g1,
        v=g1 != g2,
        c_u=c_u,
        c_d=c_d,
        c_r=c1,
        provenance=provenance,
        g1=g1,
        g2=g2,
        c1=c1,
        c2=c2,
        case_alg1=r1o.case_tag,
        case_alg2=r1r.case_tag,
    )


def certify(x: Sample, defender: str, setup: DefenderSetup, sample_id: str = "",
            overrides: Overrides = _DEFAULTS) -> CertificateRecord:
    if defender == "cc":
        return cc_certify(x, setup, sample_id, overrides)
    if defender == "cc-base":
        return cc_base_certify(x, setup, sample_id, overrides)
    raise ValueError(f"defender must be 'cc' or 'cc-base', got {defender!r}")
