import numpy as np
import pytest

from patchcert import (
    CachedClassifier,
    DefenderSetup,
    Sample,
    TableClassifier,
    build_ablation_set,
    build_mask_set,
    build_patch_set,
    make_synthetic_classifier,
)
from patchcert.masking import MaskingContext
from patchcert.voting import VotingContext


def make_setup(width, height, patch, k, band, h_clf, f_clf) -> DefenderSetup:
    patches = build_patch_set(width, height, patch)
    masks = build_mask_set(width, height, patch, k)
    bands = build_ablation_set(width, height, band)
    return DefenderSetup(
        masking=MaskingContext(h_clf, masks),
        voting=VotingContext.build(f_clf, bands, patches),
        patches=patches,
    )


def synthetic_setup(width=6, height=6, patch=2, k=3, band=2, labels=3,
                    h_formula="modsum", f_formula="weighted") -> DefenderSetup:
    h = CachedClassifier(make_synthetic_classifier(h_formula, labels))
    f = CachedClassifier(make_synthetic_classifier(f_formula, labels))
    return make_setup(width, height, patch, k, band, h, f)


def rand_sample(rng, width=6, height=6, alphabet=2) -> Sample:
    return Sample(width, height, rng.integers(1, alphabet + 1, size=width * height),
                  alphabet)


class TableBuilder:
    """Collects (pixel vector, label) assignments into a table classifier."""

    def __init__(self, default: int, label_count: int, dims=None):
        self.default = default
        self.label_count = label_count
        self.dims = dims
        self.entries = []

    def set(self, pixels, label: int) -> "TableBuilder":
        pixels = pixels.pixels if isinstance(pixels, Sample) else np.asarray(pixels)
        self.entries.append((np.array(pixels, dtype=np.int64), label))
        return self

    def build(self, cached=True):
        clf = TableClassifier(self.entries, self.default,
                              label_count=self.label_count, dims=self.dims)
        return CachedClassifier(clf) if cached else clf


@pytest.fixture
def rng():
    return np.random.default_rng(20250808)
