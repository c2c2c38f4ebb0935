"""Exhaustive attacker enumeration and the validators that check every issued
certificate and every necessary-attack-condition claim against ground truth.

At desk scale the full attacker constraint set is finite: every patch
placement combined with every content vector over the pixel alphabet.  The
validators re-derive a sample's certificates, then walk all of its variants
and confirm each guarantee the certificates promise.  A correct engine
yields zero violations; the shipped mutations prove the validators can
fail.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from . import kernels
from .attack_analysis import DefenderSetup
from .core import BudgetExceededError, PIXEL_DTYPE, Sample
from .cross_check import Overrides, certify
from .geometry import PatchSet
from .masking import (
    CASE_MAJORITY,
    MaskQueries,
    MaskingOutcome,
    predict_from_queries,
    predict_revised,
)
from .voting import band_votes_pixels, tally_from_votes, voting_predict

_DEFAULTS = Overrides()


@dataclass(frozen=True)
class Violation:
    """One broken guarantee: which sample, which claim, and the witness attack."""

    sample_id: str
    kind: str  # Def1 | Def2 | Def3 | Lem3 | Lem4 | Lem5
    defender: str
    patch_index: int
    content: tuple[int, ...]
    observed: str
    required: str

    def to_json(self) -> dict:
        return {
            "sample": self.sample_id,
            "kind": self.kind,
            "defender": self.defender,
            "patch_index": self.patch_index,
            "content": list(self.content),
            "observed": self.observed,
            "required": self.required,
        }


def attack_count(patches: PatchSet, alphabet) -> int:
    """Exact number of enumerated variants: |patches| * |alphabet|^(patch area)."""
    cells = patches.patch_side ** 2
    return len(patches) * (len(alphabet) ** cells)


def _check_budget(patches: PatchSet, alphabet, budget: Optional[int]) -> None:
    count = attack_count(patches, alphabet)
    if budget is not None and count > budget:
        raise BudgetExceededError(
            f"enumeration of {count} attack variants exceeds budget {budget}"
        )


def default_alphabet(x: Sample, alphabet_max: Optional[int] = None,
                     include_sentinel: bool = True) -> np.ndarray:
    """The attack content alphabet: 0..A by default, 1..A without the sentinel."""
    top = x.alphabet_size if alphabet_max is None else alphabet_max
    if not (1 <= top <= x.alphabet_size):
        raise BudgetExceededError(
            f"alphabet max {top} outside [1, {x.alphabet_size}]"
        )
    lo = 0 if include_sentinel else 1
    return np.arange(lo, top + 1, dtype=PIXEL_DTYPE)


def iter_attack_pixels(x: Sample, patches: PatchSet, alphabet,
                       budget: Optional[int] = None) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
    """Yield (patch_index, content row, variant pixels) exhaustively.

    Patch-major order, content vectors lexicographic over the alphabet.
    """
    _check_budget(patches, alphabet, budget)
    alphabet = np.ascontiguousarray(alphabet, dtype=PIXEL_DTYPE)
    cells = patches.patch_side ** 2
    contents = kernels.enum_contents(cells, alphabet)
    for p_idx, patch in enumerate(patches.regions):
        cell_idx = patch.cell_indices()
        variants = np.repeat(x.pixels[None, :], contents.shape[0], axis=0)
        variants[:, cell_idx] = contents
        for row in range(contents.shape[0]):
            yield p_idx, contents[row], variants[row]


def enumerate_attacks(x: Sample, patches: PatchSet, alphabet,
                      budget: Optional[int] = None) -> Iterator[tuple[int, Sample]]:
    """The attacker constraint set as (patch_index, variant sample) pairs."""
    for p_idx, _content, pixels in iter_attack_pixels(x, patches, alphabet, budget):
        yield p_idx, x.with_pixels(pixels)


def _variant_masking(pixels: np.ndarray, x: Sample, setup: DefenderSetup,
                     overrides: Overrides, *, want_original: bool,
                     want_revised: bool) -> tuple[Optional[MaskingOutcome], Optional[MaskingOutcome]]:
    """Masking outcomes for one variant, honoring prediction overrides."""
    if overrides.predict_original or overrides.predict_revised:
        variant = x.with_pixels(pixels)
        original = overrides.original_fn()(variant, setup.masking) if want_original else None
        revised = overrides.revised_fn()(variant, setup.masking) if want_revised else None
        return original, revised
    queries = MaskQueries(pixels, setup.masking)
    original = (
        predict_from_queries(queries, scan_all=False, warn_on_majority=False)
        if want_original else None
    )
    revised = (
        predict_from_queries(queries, scan_all=True, warn_on_majority=True)
        if want_revised else None
    )
    return original, revised


def validate_certificates(samples, defender: str, setup: DefenderSetup, *,
                          alphabet=None, budget: Optional[int] = None,
                          overrides: Overrides = _DEFAULTS) -> list[Violation]:
    """Check every certificate of every sample against all enumerated variants.

    Per sample: re-derive the record, then for each variant check
    (a) c_u: label preserved and no warning; (b) c_d: a label flip warns;
    (c) c_r: label preserved; (d) c1: the revised masking prediction never
    exits through its majority fallback (checked for both defender choices,
    since the claim concerns the revised variant).
    """
    violations: list[Violation] = []
    for sample_id, x in samples:
        rec = certify(x, defender, setup, sample_id, overrides)
        if not (rec.c_u or rec.c_d or rec.c_r or rec.c1):
            continue
        alpha = default_alphabet(x) if alphabet is None else alphabet
        want_original = defender == "cc-base"
        for p_idx, content, pixels in iter_attack_pixels(x, setup.patches, alpha, budget):
            original, revised = _variant_masking(
                pixels, x, setup, overrides,
                want_original=want_original, want_revised=True,
            )
            g2v = tally_from_votes(
                band_votes_pixels(pixels, setup.voting), setup.voting.f.label_count
            ).winner
            if defender == "cc":
                g_var = revised.label
                v_var = (revised.label != g2v) or revised.warning
            else:
                g_var = original.label
                v_var = original.label != g2v

            def report(kind, observed, required, _p=p_idx, _c=content):
                violations.append(Violation(
                    sample_id, kind, defender, _p,
                    tuple(int(v) for v in _c),
                    observed=observed, required=required,
                ))

            if rec.c_u and not (g_var == rec.g and not v_var):
                report("Def3", f"g={g_var} v={v_var}", f"g={rec.g} v=False")
            if rec.c_d and g_var != rec.g and not v_var:
                report("Def1", f"g={g_var} v=False", "warning on label change")
            if rec.c_r and g_var != rec.g:
                report("Def2", f"g={g_var}", f"g={rec.g}")
            if rec.c1 and revised.case_tag == CASE_MAJORITY:
                report("Lem3", "revised prediction hit its majority fallback",
                       "certified samples never reach the fallback")
    return violations


def validate_nac_necessity(samples, setup: DefenderSetup, *, alphabet=None,
                           budget: Optional[int] = None,
                           overrides: Overrides = _DEFAULTS) -> list[Violation]:
    """Check that every observed silent label flip satisfies the claimed
    necessary attack condition of its defender."""
    violations: list[Violation] = []
    nac_masking = overrides.nac_masking_fn()
    nac_voting = overrides.nac_voting_fn()
    for sample_id, x in samples:
        g1 = predict_revised(x, setup.masking).label
        g2 = voting_predict(x, setup.voting)
        alpha = default_alphabet(x) if alphabet is None else alphabet
        for p_idx, content, pixels in iter_attack_pixels(x, setup.patches, alpha, budget):
            patch = setup.patches.regions[p_idx]
            queries = MaskQueries(pixels, setup.masking)
            revised = predict_from_queries(queries, scan_all=True, warn_on_majority=True)
            if revised.case_tag != CASE_MAJORITY and revised.label != g1:
                if not nac_masking(x, patch, revised.label, setup.masking, g1):
                    violations.append(Violation(
                        sample_id, "Lem4", "cc", p_idx,
                        tuple(int(c) for c in content),
                        observed=f"silent masking flip to {revised.label}",
                        required="necessary attack condition must hold",
                    ))
            g2v = tally_from_votes(
                band_votes_pixels(pixels, setup.voting), setup.voting.f.label_count
            ).winner
            if g2v != g2:
                if not nac_voting(x, patch, g2v, setup.voting, g2):
                    violations.append(Violation(
                        sample_id, "Lem5", "cc", p_idx,
                        tuple(int(c) for c in content),
                        observed=f"voting flip to {g2v}",
                        required="necessary attack condition must hold",
                    ))
    return violations


def differential_report(samples, setup: DefenderSetup, *, alphabet=None,
                        budget: Optional[int] = None) -> dict:
    """Compare the two masking prediction variants on every sample and variant.

    Informational: records label disagreements without judging them.
    """
    checked = 0
    disagreements = []
    for sample_id, x in samples:
        alpha = default_alphabet(x) if alphabet is None else alphabet
        inputs = itertools.chain(
            [(None, None, MaskQueries(x.pixels, setup.masking))],
            (
                (p_idx, content, MaskQueries(pixels, setup.masking))
                for p_idx, content, pixels in iter_attack_pixels(x, setup.patches, alpha, budget)
            ),
        )
        for p_idx, content, queries in inputs:
            original = predict_from_queries(queries, scan_all=False, warn_on_majority=False)
            revised = predict_from_queries(queries, scan_all=True, warn_on_majority=True)
            checked += 1
            if original.label != revised.label:
                disagreements.append({
                    "sample": sample_id,
                    "patch_index": p_idx,
                    "content": None if content is None else [int(c) for c in content],
                    "original": original.label,
                    "revised": revised.label,
                })
    return {"checked": checked, "disagreements": disagreements}
