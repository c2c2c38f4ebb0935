import pytest

from patchcert import (
    Sample,
    build_mask_set,
    double_mask_agreement,
    double_masked_votes,
    make_table_classifier,
    predict_original,
    predict_revised,
    region_add,
    region_sub,
)
from patchcert.core import BinaryRegion, apply_region
from patchcert.masking import MaskingContext

from conftest import TableBuilder


def four_mask_ctx(builder_default=0, label_count=3, entries=()):
    """4x4 frame, 4 masks of 3x3: the smallest geometry with real case splits."""
    masks = build_mask_set(4, 4, 2, 2)
    builder = TableBuilder(default=builder_default, label_count=label_count)
    for pixels, label in entries:
        builder.set(pixels, label)
    return MaskingContext(builder.build(), masks)


def one_masked(x, ctx, i):
    j = BinaryRegion.full(x.width, x.height)
    return apply_region(x, region_sub(j, ctx.masks.masks[i]))


def two_masked(x, ctx, i, k):
    j = BinaryRegion.full(x.width, x.height)
    union = region_add(ctx.masks.masks[i], ctx.masks.masks[k])
    return apply_region(x, region_sub(j, union))


@pytest.fixture
def x4(rng):
    return Sample(4, 4, rng.integers(1, 3, size=16), 2)


class TestCases:
    def test_case1_agreement(self, x4):
        ctx = four_mask_ctx(builder_default=2)
        for predict in (predict_original, predict_revised):
            out = predict(x4, ctx)
            assert (out.label, out.warning, out.case_tag) == (2, False, "I")
            assert out.witness is None

    def test_case2_consensus_mask(self, x4):
        # first round disagrees on mask 0; its second round all agree on 2
        entries = [(one_masked(x4, four_mask_ctx(), 0).pixels, 2)]
        entries += [
            (two_masked(x4, four_mask_ctx(), 0, k).pixels, 2) for k in (1, 2, 3)
        ]
        ctx = four_mask_ctx(entries=entries)
        for predict in (predict_original, predict_revised):
            out = predict(x4, ctx)
            assert (out.label, out.warning, out.case_tag) == (2, False, "II")
            assert out.witness == 0

    def test_case3_majority_fallback(self, x4):
        # every second round disagrees: original stays silent, revised warns
        base = four_mask_ctx()
        entries = [
            (one_masked(x4, base, 0).pixels, 1),
            (two_masked(x4, base, 1, 2).pixels, 1),
            (two_masked(x4, base, 1, 3).pixels, 1),
        ]
        ctx = four_mask_ctx(entries=entries)
        original = predict_original(x4, ctx)
        revised = predict_revised(x4, ctx)
        assert (original.label, original.warning, original.case_tag) == (0, False, "III")
        assert (revised.label, revised.warning, revised.case_tag) == (0, True, "III")
        # original scanned only the minority mask, revised all four
        assert len(original.witness) == 1
        assert len(revised.witness) == 4

    def test_case2_prefers_first_mask_in_set_order(self, x4):
        # masks 1 and 2 both reach a second-round consensus; the witness must
        # be the first in mask-set order
        base = four_mask_ctx()
        entries = [(one_masked(x4, base, 1).pixels, 2),
                   (one_masked(x4, base, 2).pixels, 2)]
        for row in (1, 2):
            for k in range(4):
                if k != row:  # the diagonal is the single-mask entry above
                    entries.append((two_masked(x4, base, row, k).pixels, 2))
        ctx = four_mask_ctx(entries=entries)
        for predict in (predict_original, predict_revised):
            out = predict(x4, ctx)
            assert out.case_tag == "II" and out.witness == 1

    def test_warning_iff_case3_for_revised(self, x4, rng):
        masks = build_mask_set(4, 4, 2, 2)
        for trial in range(30):
            builder = TableBuilder(default=0, label_count=3)
            base_ctx = MaskingContext(make_table_classifier([], 0, 3), masks)
            for i in range(4):
                for k in range(i, 4):
                    builder.set(two_masked(x4, base_ctx, i, k).pixels,
                                int(rng.integers(0, 3)))
            ctx = MaskingContext(builder.build(), masks)
            out = predict_revised(x4, ctx)
            assert out.warning == (out.case_tag == "III")
            assert predict_original(x4, ctx).warning is False


class TestAgreementCertificate:
    def test_constant_classifier(self, x4):
        ctx = four_mask_ctx(builder_default=1)
        assert double_mask_agreement(x4, ctx)

    def test_single_deviant_pair(self, x4):
        base = four_mask_ctx()
        ctx = four_mask_ctx(entries=[(two_masked(x4, base, 1, 2).pixels, 1)])
        assert not double_mask_agreement(x4, ctx)

    def test_single_mask_set(self, x4):
        masks = build_mask_set(4, 4, 2, 1)
        ctx = MaskingContext(make_table_classifier([], default=0, label_count=2), masks)
        assert double_mask_agreement(x4, ctx)

    def test_agreement_implies_case1_same_label(self, x4):
        ctx = four_mask_ctx(builder_default=2)
        assert double_mask_agreement(x4, ctx)
        assert predict_original(x4, ctx).case_tag == "I"
        assert predict_revised(x4, ctx).case_tag == "I"
        assert predict_original(x4, ctx).label == predict_revised(x4, ctx).label == 2


class TestDoubleTable:
    def test_constant_table(self, x4):
        ctx = four_mask_ctx(builder_default=1)
        table = double_masked_votes(x4, ctx)
        assert table.shape == (4, 4)
        assert (table == 1).all()

    def test_symmetry(self, x4, rng):
        base = four_mask_ctx()
        entries = [
            (two_masked(x4, base, i, k).pixels, int(rng.integers(0, 3)))
            for i in range(4) for k in range(i, 4)
        ]
        ctx = four_mask_ctx(entries=entries)
        table = double_masked_votes(x4, ctx)
        assert (table == table.T).all()

    def test_diagonal_equals_single_mask_votes(self, rng):
        for _ in range(10):
            x = Sample(4, 4, rng.integers(1, 3, size=16), 2)
            base = four_mask_ctx()
            entries = [
                (two_masked(x, base, i, k).pixels, int(rng.integers(0, 3)))
                for i in range(4) for k in range(i, 4)
            ]
            ctx = four_mask_ctx(entries=entries)
            table = double_masked_votes(x, ctx)
            singles = [ctx.h.classify(one_masked(x, ctx, i)) for i in range(4)]
            assert [int(v) for v in table.diagonal()] == singles
