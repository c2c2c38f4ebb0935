"""The numba and numpy kernel paths must agree exactly."""

import numpy as np
import pytest

from patchcert import kernels


requires_numba = pytest.mark.skipif(not kernels.USE_NUMBA, reason="numba path not active")


@requires_numba
class TestPathEquivalence:
    def test_apply_keeps(self, rng):
        pixels = rng.integers(0, 5, size=36)
        keeps = rng.integers(0, 2, size=(9, 36)).astype(np.uint8)
        assert (kernels.apply_keeps(pixels, keeps)
                == kernels.apply_keeps_np(pixels, keeps)).all()

    def test_labels(self, rng):
        batch = rng.integers(0, 5, size=(40, 16))
        weights = np.arange(1, 17, dtype=np.int64)
        assert (kernels.modsum_labels(batch, 3)
                == kernels.modsum_labels_np(batch, 3)).all()
        assert (kernels.weighted_labels(batch, weights, 5)
                == kernels.weighted_labels_np(batch, weights, 5)).all()

    def test_overlap_and_containment(self, rng):
        patches = rng.integers(0, 2, size=(12, 24)).astype(np.uint8)
        others = rng.integers(0, 2, size=(7, 24)).astype(np.uint8)
        assert (kernels.overlap_counts(patches, others)
                == kernels.overlap_counts_np(patches, others)).all()
        assert (kernels.containment(patches, others)
                == kernels.containment_np(patches, others)).all()

    def test_enum_and_tally(self, rng):
        alphabet = np.array([0, 1, 2], dtype=np.int64)
        assert (kernels.enum_contents(4, alphabet)
                == kernels.enum_contents_np(4, alphabet)).all()
        labels = rng.integers(0, 4, size=200)
        assert (kernels.tally(labels, 4) == kernels.tally_np(labels, 4)).all()


class TestEnumeration:
    def test_lexicographic(self):
        out = kernels.enum_contents(2, np.array([0, 1], dtype=np.int64))
        assert out.tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]

    def test_count(self):
        out = kernels.enum_contents(4, np.array([0, 1, 2], dtype=np.int64))
        assert out.shape == (81, 4)
        assert len({tuple(r) for r in out.tolist()}) == 81

    def test_non_contiguous_alphabet(self):
        out = kernels.enum_contents(1, np.array([1, 2], dtype=np.int64))
        assert out.tolist() == [[1], [2]]


class TestTally:
    def test_counts(self):
        labels = np.array([2, 0, 2, 2, 1], dtype=np.int64)
        assert kernels.tally(labels, 4).tolist() == [1, 1, 3, 0]
