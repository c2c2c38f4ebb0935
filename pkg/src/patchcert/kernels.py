"""Hot numeric kernels with numba-compiled and pure-numpy implementations.

The env flag PATCHCERT_KERNELS selects the path: "numba" (default when
numba imports), or "numpy" to force the fallback.  Both paths return
identical integer results; tests assert the equivalence and
benchmarks/bench_kernels.py compares their speed.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("PATCHCERT_KERNELS", "").strip().lower()
if _FLAG not in ("", "numba", "numpy"):
    raise ValueError(f"PATCHCERT_KERNELS must be 'numba' or 'numpy', got {_FLAG!r}")

if _FLAG == "numpy":
    HAS_NUMBA = False
else:
    try:
        from numba import njit
        HAS_NUMBA = True
    except ImportError:
        HAS_NUMBA = False
        if _FLAG == "numba":
            raise

USE_NUMBA = HAS_NUMBA and _FLAG != "numpy"


# -- pure numpy ---------------------------------------------------------------

def apply_keeps_np(pixels, keeps):
    """Mutants of one pixel vector under a stack of keep-regions.

    keeps[r, i] == 1 keeps pixel i in mutant r, 0 drops it to the sentinel.
    """
    return pixels[None, :] * keeps.astype(np.int64)


def modsum_labels_np(batch, label_count):
    """Label = sum of pixels mod label_count, per row."""
    return batch.sum(axis=1) % label_count


def weighted_labels_np(batch, weights, label_count):
    """Label = weighted pixel sum mod label_count, per row."""
    return (batch @ weights) % label_count


def overlap_counts_np(patches, bands):
    """For each patch bit-row, how many band bit-rows intersect it."""
    inter = patches.astype(np.int64) @ bands.astype(np.int64).T
    return (inter > 0).sum(axis=1).astype(np.int64)


def containment_np(patches, masks):
    """contained[i, j] == True iff patch i is fully inside mask j."""
    outside = patches.astype(np.int64) @ (1 - masks.astype(np.int64)).T
    return outside == 0


def enum_contents_np(cells, alphabet):
    """All alphabet^cells content vectors in lexicographic order (row-major digits)."""
    base = len(alphabet)
    total = base ** cells
    idx = np.arange(total, dtype=np.int64)
    out = np.empty((total, cells), dtype=np.int64)
    for c in range(cells - 1, -1, -1):
        out[:, c] = alphabet[idx % base]
        idx //= base
    return out


def tally_np(labels, label_count):
    return np.bincount(labels, minlength=label_count).astype(np.int64)


# -- numba --------------------------------------------------------------------

if USE_NUMBA:

    @njit(cache=True)
    def _apply_keeps_nb(pixels, keeps):
        r, n = keeps.shape
        out = np.empty((r, n), dtype=np.int64)
        for i in range(r):
            for j in range(n):
                out[i, j] = pixels[j] * keeps[i, j]
        return out

    @njit(cache=True)
    def _modsum_labels_nb(batch, label_count):
        r, n = batch.shape
        out = np.empty(r, dtype=np.int64)
        for i in range(r):
            s = 0
            for j in range(n):
                s += batch[i, j]
            out[i] = s % label_count
        return out

    @njit(cache=True)
    def _weighted_labels_nb(batch, weights, label_count):
        r, n = batch.shape
        out = np.empty(r, dtype=np.int64)
        for i in range(r):
            s = 0
            for j in range(n):
                s += batch[i, j] * weights[j]
            out[i] = s % label_count
        return out

    @njit(cache=True)
    def _overlap_counts_nb(patches, bands):
        p, n = patches.shape
        b = bands.shape[0]
        out = np.zeros(p, dtype=np.int64)
        for i in range(p):
            for j in range(b):
                for k in range(n):
                    if patches[i, k] and bands[j, k]:
                        out[i] += 1
                        break
        return out

    @njit(cache=True)
    def _containment_nb(patches, masks):
        p, n = patches.shape
        m = masks.shape[0]
        out = np.ones((p, m), dtype=np.bool_)
        for i in range(p):
            for j in range(m):
                for k in range(n):
                    if patches[i, k] and not masks[j, k]:
                        out[i, j] = False
                        break
        return out

    @njit(cache=True)
    def _enum_contents_nb(cells, alphabet):
        base = alphabet.shape[0]
        total = base ** cells
        out = np.empty((total, cells), dtype=np.int64)
        for row in range(total):
            idx = row
            for c in range(cells - 1, -1, -1):
                out[row, c] = alphabet[idx % base]
                idx //= base
        return out

    @njit(cache=True)
    def _tally_nb(labels, label_count):
        out = np.zeros(label_count, dtype=np.int64)
        for i in range(labels.shape[0]):
            out[labels[i]] += 1
        return out

    def apply_keeps(pixels, keeps):
        return _apply_keeps_nb(pixels, keeps)

    def modsum_labels(batch, label_count):
        return _modsum_labels_nb(batch, label_count)

    def weighted_labels(batch, weights, label_count):
        return _weighted_labels_nb(batch, weights, label_count)

    def overlap_counts(patches, bands):
        return _overlap_counts_nb(patches, bands)

    def containment(patches, masks):
        return _containment_nb(patches, masks)

    def enum_contents(cells, alphabet):
        return _enum_contents_nb(cells, np.ascontiguousarray(alphabet, dtype=np.int64))

    def tally(labels, label_count):
        return _tally_nb(np.ascontiguousarray(labels, dtype=np.int64), label_count)

else:
    apply_keeps = apply_keeps_np
    modsum_labels = modsum_labels_np
    weighted_labels = weighted_labels_np
    overlap_counts = overlap_counts_np
    containment = containment_np

    def enum_contents(cells, alphabet):
        return enum_contents_np(cells, np.ascontiguousarray(alphabet, dtype=np.int64))

    def tally(labels, label_count):
        return tally_np(np.ascontiguousarray(labels, dtype=np.int64), label_count)
