import numpy as np
import pytest

from patchcert import (
    GeometryError,
    build_ablation_set,
    build_mask_set,
    build_patch_set,
    compute_delta,
    region_contains,
    verify_covering,
)
from patchcert.geometry import bands_overlapping


class TestPatchSet:
    def test_full_frame_patch(self):
        ps = build_patch_set(4, 4, 4)
        assert len(ps) == 1
        assert ps.regions[0].popcount() == 16

    def test_counts(self):
        assert len(build_patch_set(3, 3, 2)) == 4
        assert len(build_patch_set(6, 6, 2)) == 25  # (6-2+1)^2 by enumeration

    def test_row_major_order(self):
        ps = build_patch_set(3, 3, 2)
        corners = [tuple(np.argwhere(r.grid())[0]) for r in ps.regions]
        assert corners == [(0, 0), (0, 1), (1, 0), (1, 1)]

    def test_out_of_range(self):
        with pytest.raises(GeometryError):
            build_patch_set(4, 4, 5)
        with pytest.raises(GeometryError):
            build_patch_set(4, 4, 0)


class TestMaskSet:
    def test_k1_full_frame(self):
        ms = build_mask_set(5, 4, 2, 1)
        assert len(ms) == 1
        assert ms.masks[0].popcount() == 20

    def test_6x6_p2_k3(self):
        ms = build_mask_set(6, 6, 2, 3)
        assert len(ms) == 9
        ok, counter = verify_covering(ms, build_patch_set(6, 6, 2))
        assert ok and counter is None

    def test_6x6_p2_k2(self):
        ms = build_mask_set(6, 6, 2, 2)
        assert len(ms) == 4
        ok, _ = verify_covering(ms, build_patch_set(6, 6, 2))
        assert ok

    def test_covering_counterexample(self):
        ps = build_patch_set(4, 4, 2)
        ms = build_mask_set(4, 4, 2, 2)
        broken = type(ms)(
            width=4, height=4, masks_per_axis=2, mask_side=ms.mask_side,
            stride=ms.stride,
            masks=tuple(type(m)(4, 4, np.zeros(16, dtype=np.uint8)) for m in ms.masks),
        )
        ok, counter = verify_covering(broken, ps)
        assert not ok and counter == 0

    def test_deterministic(self):
        a = build_mask_set(8, 6, 2, 3)
        b = build_mask_set(8, 6, 2, 3)
        assert [m.bits.tolist() for m in a.masks] == [m.bits.tolist() for m in b.masks]


class TestAblationSet:
    def test_full_width_bands(self):
        bands = build_ablation_set(4, 3, 4)
        assert len(bands) == 4
        assert all(b.popcount() == 12 for b in bands.bands)

    def test_single_column_bands(self):
        bands = build_ablation_set(4, 2, 1)
        assert len(bands) == 4
        for i, b in enumerate(bands.bands):
            cols = sorted(set(np.argwhere(b.grid())[:, 1]))
            assert cols == [i]

    def test_wraparound(self):
        bands = build_ablation_set(6, 2, 2)
        cols = sorted(set(np.argwhere(bands.bands[5].grid())[:, 1]))
        assert cols == [0, 5]  # starts at 5, wraps to 0

    def test_out_of_range(self):
        with pytest.raises(GeometryError):
            build_ablation_set(4, 4, 5)


class TestDelta:
    def brute_delta(self, bands, patches):
        # independent oracle: direct overlap counting via region algebra
        best = 0
        for p in patches.regions:
            n = sum(1 for b in bands.bands if (b.bits & p.bits).any())
            best = max(best, n)
        return best

    def test_b1_p1(self):
        assert compute_delta(build_ablation_set(4, 4, 1), build_patch_set(4, 4, 1)) == 1

    def test_w10_b3_p2(self):
        bands = build_ablation_set(10, 10, 3)
        patches = build_patch_set(10, 10, 2)
        assert compute_delta(bands, patches) == 4
        assert self.brute_delta(bands, patches) == 4

    def test_w5_b1_p2_delta2(self):
        # the geometry used by the transcribed vote-arithmetic fixture
        bands = build_ablation_set(5, 5, 1)
        patches = build_patch_set(5, 5, 2)
        assert compute_delta(bands, patches) == 2

    def test_closed_form_small_sweep(self):
        for w in (4, 5, 7):
            for p in (1, 2, 3):
                for b in (1, 2, 3, 4):
                    if b > w:
                        continue
                    bands = build_ablation_set(w, 4, b)
                    patches = build_patch_set(w, 4, p)
                    exhaustive = compute_delta(bands, patches)
                    assert exhaustive == self.brute_delta(bands, patches)
                    assert exhaustive == min(w, p + b - 1)


class TestBandsOverlapping:
    def test_counts_match_delta(self):
        bands = build_ablation_set(6, 6, 2)
        patches = build_patch_set(6, 6, 2)
        counts = [int(bands_overlapping(bands, p).sum()) for p in patches.regions]
        assert max(counts) == compute_delta(bands, patches)
        assert all(c == 3 for c in counts)  # p+b-1 everywhere on a wrapped frame


class TestCoveringSweep:
    def test_every_built_mask_set_covers(self):
        for w in (4, 6, 9):
            for h in (4, 7):
                for p in (1, 2, 3):
                    for k in (2, 3, 4):
                        try:
                            ms = build_mask_set(w, h, p, k)
                        except GeometryError:
                            continue
                        ok, _ = verify_covering(ms, build_patch_set(w, h, p))
                        assert ok
                        for patch in build_patch_set(w, h, p).regions:
                            assert any(region_contains(m, patch) for m in ms.masks)
