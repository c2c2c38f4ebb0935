"""Label oracles: deterministic in-process classifiers, a query cache, and a
client for external classifier processes.

Every classifier is a total, deterministic function from pixel content to a
label in [0, label_count).  Classifiers see the 0 sentinel like any other
pixel value; removal semantics live entirely in the defenders' algebra.

External classifiers speak newline-delimited JSON over the child's
stdin/stdout, one request in flight at a time:

    -> {"id": 0, "hello": "patchcert/1"}
    <- {"id": 0, "ack": "patchcert/1"}
    -> {"id": 1, "w": 6, "h": 6, "labels": 3, "pixels": [0, 1, ...]}
    <- {"id": 1, "label": 2}

Responses must echo the request id; any other output line is a protocol
error.
"""

from __future__ import annotations

import json
import select
import shlex
import subprocess
import threading
import time

import numpy as np

from . import kernels
from .core import (
    ConfigError,
    DimensionMismatchError,
    PIXEL_DTYPE,
    PatchCertError,
    Sample,
)

PROTOCOL_VERSION = "patchcert/1"


class ExternalClassifierError(PatchCertError):
    """Base for faults talking to an external classifier process."""


class ExternalSpawnError(ExternalClassifierError):
    """The classifier process could not be started."""


class ExternalTimeoutError(ExternalClassifierError):
    """The classifier process did not answer within the timeout."""


class MalformedResponseError(ExternalClassifierError):
    """The classifier process wrote something that is not a valid response."""


class ResponseIdMismatchError(ExternalClassifierError):
    """The classifier process echoed the wrong request id."""


class Classifier:
    """Base label oracle.  Subclasses implement classify_pixels."""

    def __init__(self, label_count: int):
        if label_count < 1:
            raise ConfigError(f"label count must be >= 1, got {label_count}")
        self.label_count = label_count

    def expected_dims(self) -> tuple[int, int] | None:
        """(width, height) this classifier requires, or None to accept any."""
        return None

    def classify(self, x: Sample) -> int:
        dims = self.expected_dims()
        if dims is not None and (x.width, x.height) != dims:
            raise DimensionMismatchError(
                f"classifier expects {dims[0]}x{dims[1]} samples, got {x.width}x{x.height}"
            )
        return self.classify_pixels(x.pixels)

    def classify_pixels(self, pixels: np.ndarray) -> int:
        raise NotImplementedError

    def classify_pixel_batch(self, batch: np.ndarray) -> np.ndarray:
        return np.array([self.classify_pixels(row) for row in batch], dtype=np.int64)


class TableClassifier(Classifier):
    """Exact pixel-vector lookup with a default label for everything else."""

    def __init__(self, entries, default: int, label_count: int | None = None,
                 dims: tuple[int, int] | None = None):
        table: dict[bytes, int] = {}
        max_label = default
        for pixels, label in entries:
            key = np.ascontiguousarray(pixels, dtype=PIXEL_DTYPE).tobytes()
            if key in table and table[key] != label:
                raise ConfigError(
                    f"conflicting table entries: same pixels mapped to "
                    f"{table[key]} and {label}"
                )
            table[key] = label
            max_label = max(max_label, label)
        super().__init__(label_count if label_count is not None else max_label + 1)
        if max_label >= self.label_count:
            raise ConfigError(
                f"table entry label {max_label} outside [0, {self.label_count})"
            )
        self._table = table
        self._default = default
        self._dims = dims

    def expected_dims(self):
        return self._dims

    def classify_pixels(self, pixels: np.ndarray) -> int:
        key = np.ascontiguousarray(pixels, dtype=PIXEL_DTYPE).tobytes()
        return self._table.get(key, self._default)


class SyntheticClassifier(Classifier):
    """A registered pure formula over pixel values."""

    FORMULAS = ("modsum", "weighted")

    def __init__(self, formula: str, label_count: int):
        if formula not in self.FORMULAS:
            raise ConfigError(f"unknown synthetic classifier formula {formula!r}")
        super().__init__(label_count)
        self.formula = formula

    def classify_pixels(self, pixels: np.ndarray) -> int:
        return int(self.classify_pixel_batch(pixels[None, :])[0])

    def classify_pixel_batch(self, batch: np.ndarray) -> np.ndarray:
        batch = np.ascontiguousarray(batch, dtype=PIXEL_DTYPE)
        if self.formula == "modsum":
            return kernels.modsum_labels(batch, self.label_count)
        weights = np.arange(1, batch.shape[1] + 1, dtype=PIXEL_DTYPE)
        return kernels.weighted_labels(batch, weights, self.label_count)


class ExternalClassifier(Classifier):
    """Client for a classifier process speaking the wire protocol.

    One request is outstanding at any time; calls are serialized, so the
    handle may be shared between threads (calls block).
    """

    def __init__(self, command, label_count: int, timeout_ms: int = 10_000,
                 dims: tuple[int, int] | None = None):
        super().__init__(label_count)
        self._dims = dims
        self._timeout = timeout_ms / 1000.0
        self._lock = threading.Lock()
        self._next_id = 1
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        try:
            self._proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, bufsize=0
            )
        except OSError as exc:
            raise ExternalSpawnError(f"cannot spawn {argv!r}: {exc}") from exc
        self._buffer = b""
        try:
            self._handshake()
        except ExternalClassifierError:
            self.close()
            raise

    def _handshake(self):
        reply = self._round_trip({"id": 0, "hello": PROTOCOL_VERSION})
        if reply.get("ack") != PROTOCOL_VERSION:
            raise MalformedResponseError(
                f"handshake failed: expected ack {PROTOCOL_VERSION!r}, got {reply!r}"
            )

    def _write_line(self, obj) -> None:
        data = json.dumps(obj, separators=(",", ":")).encode("ascii") + b"\n"
        try:
            self._proc.stdin.write(data)
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ExternalClassifierError(f"classifier process pipe closed: {exc}") from exc

    def _read_line(self, deadline: float) -> bytes:
        while b"\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise ExternalTimeoutError(
                    f"no response within {self._timeout * 1000:.0f} ms"
                )
            ready, _, _ = select.select([self._proc.stdout], [], [], remaining)
            if not ready:
                raise ExternalTimeoutError(
                    f"no response within {self._timeout * 1000:.0f} ms"
                )
            chunk = self._proc.stdout.read(65536)
            if not chunk:
                raise ExternalClassifierError("classifier process closed its stdout")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line

    def _round_trip(self, request) -> dict:
        self._write_line(request)
        line = self._read_line(time.monotonic() + self._timeout)
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedResponseError(f"not JSON: {line[:200]!r}") from exc
        if not isinstance(reply, dict):
            raise MalformedResponseError(f"response is not an object: {line[:200]!r}")
        if "error" in reply:
            raise MalformedResponseError(f"peer reported an error: {reply['error']!r}")
        if reply.get("id") != request["id"]:
            raise ResponseIdMismatchError(
                f"sent id {request['id']}, got {reply.get('id')!r}"
            )
        return reply

    def expected_dims(self):
        return self._dims

    def classify(self, x: Sample) -> int:
        dims = self.expected_dims()
        if dims is not None and (x.width, x.height) != dims:
            raise DimensionMismatchError(
                f"classifier expects {dims[0]}x{dims[1]} samples, got {x.width}x{x.height}"
            )
        return self._classify_wh(x.pixels, x.width, x.height)

    def classify_pixels(self, pixels: np.ndarray) -> int:
        dims = self.expected_dims()
        if dims is None:
            raise ConfigError(
                "external classifier needs declared dimensions for raw-pixel queries"
            )
        return self._classify_wh(pixels, dims[0], dims[1])

    def _classify_wh(self, pixels: np.ndarray, width: int, height: int) -> int:
        with self._lock:
            request_id = self._next_id
            self._next_id += 1
            reply = self._round_trip({
                "id": request_id,
                "w": width,
                "h": height,
                "labels": self.label_count,
                "pixels": [int(v) for v in pixels],
            })
        label = reply.get("label")
        if not isinstance(label, int) or not (0 <= label < self.label_count):
            raise MalformedResponseError(f"label out of range or missing: {reply!r}")
        return label

    def close(self) -> None:
        proc = getattr(self, "_proc", None)
        if proc is None:
            return
        try:
            if proc.stdin:
                proc.stdin.close()
            proc.wait(timeout=2)
        except (OSError, subprocess.TimeoutExpired):
            proc.kill()
            proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass


class QueryCache:
    """Exact pixel-vector memo of classifier answers with hit/miss counters."""

    def __init__(self):
        self._map: dict[bytes, int] = {}
        self.hits = 0
        self.misses = 0

    def __len__(self):
        return len(self._map)

    def clear(self):
        self._map.clear()

    def get(self, key: bytes):
        label = self._map.get(key)
        if label is None:
            self.misses += 1
        else:
            self.hits += 1
        return label

    def put(self, key: bytes, label: int):
        self._map[key] = label


class CachedClassifier(Classifier):
    """Memoizing wrapper; observable answers are identical to the inner handle."""

    def __init__(self, inner: Classifier, cache: QueryCache | None = None):
        super().__init__(inner.label_count)
        self.inner = inner
        self.cache = cache if cache is not None else QueryCache()

    def expected_dims(self):
        return self.inner.expected_dims()

    def classify_pixels(self, pixels: np.ndarray) -> int:
        pixels = np.ascontiguousarray(pixels, dtype=PIXEL_DTYPE)
        key = pixels.tobytes()
        label = self.cache.get(key)
        if label is None:
            label = int(self.inner.classify_pixels(pixels))
            self.cache.put(key, label)
        return label

    def classify_pixel_batch(self, batch: np.ndarray) -> np.ndarray:
        batch = np.ascontiguousarray(batch, dtype=PIXEL_DTYPE)
        labels = np.empty(batch.shape[0], dtype=np.int64)
        miss_rows = []
        for i in range(batch.shape[0]):
            key = batch[i].tobytes()
            hit = self.cache.get(key)
            if hit is None:
                miss_rows.append(i)
            else:
                labels[i] = hit
        if miss_rows:
            computed = self.inner.classify_pixel_batch(batch[miss_rows])
            for i, label in zip(miss_rows, computed):
                self.cache.put(batch[i].tobytes(), int(label))
                labels[i] = label
        return labels


def make_table_classifier(entries, default: int, label_count: int | None = None,
                          dims: tuple[int, int] | None = None) -> TableClassifier:
    """Table oracle from (Sample, label) pairs; exact match or the default label.

    ``dims`` pins the expected dimensions for an entry-less (constant)
    classifier; with entries it must agree with them.
    """
    raw = []
    for sample, label in entries:
        if dims is None:
            dims = (sample.width, sample.height)
        elif (sample.width, sample.height) != dims:
            raise ConfigError("table entries must share dimensions")
        raw.append((sample.pixels, label))
    return TableClassifier(raw, default, label_count=label_count, dims=dims)


def make_synthetic_classifier(formula: str, label_count: int) -> SyntheticClassifier:
    return SyntheticClassifier(formula, label_count)


def make_external_classifier(command, label_count: int, timeout_ms: int = 10_000,
                             dims: tuple[int, int] | None = None) -> ExternalClassifier:
    return ExternalClassifier(command, label_count, timeout_ms=timeout_ms, dims=dims)


def load_table_classifier(path) -> TableClassifier:
    """Table oracle from a JSON model file.

    Schema: {"width": w, "height": h, "labels": L, "default": d,
    "entries": [{"pixels": [...], "label": l}, ...]}.
    """
    try:
        with open(path, encoding="ascii") as fh:
            spec = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: cannot load table model: {exc}") from exc
    for field in ("width", "height", "labels", "default", "entries"):
        if field not in spec:
            raise ConfigError(f"{path}: missing field {field!r}")
    width, height = int(spec["width"]), int(spec["height"])
    size = width * height
    entries = []
    for i, entry in enumerate(spec["entries"]):
        pixels = entry.get("pixels")
        if not isinstance(pixels, list) or len(pixels) != size:
            raise ConfigError(f"{path}: entry {i}: pixels must list {size} values")
        entries.append((np.array(pixels, dtype=PIXEL_DTYPE), int(entry["label"])))
    return TableClassifier(
        entries, int(spec["default"]), label_count=int(spec["labels"]),
        dims=(width, height),
    )


def save_table_classifier(path, classifier: TableClassifier) -> None:
    """Write a table oracle to the JSON model format (entries sorted by key)."""
    dims = classifier.expected_dims()
    if dims is None:
        raise ConfigError("cannot save a table classifier without dimensions")
    entries = [
        {"pixels": [int(v) for v in np.frombuffer(key, dtype=PIXEL_DTYPE)], "label": label}
        for key, label in sorted(classifier._table.items())
    ]
    payload = {
        "width": dims[0],
        "height": dims[1],
        "labels": classifier.label_count,
        "default": classifier._default,
        "entries": entries,
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
