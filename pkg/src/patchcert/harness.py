"""Run orchestration: configuration, metrics, deterministic reports, workers.

Reports are byte-reproducible: accuracy fractions are serialized as decimal
strings with six fractional digits (round half to even), records keep
dataset order, and JSON keys are sorted.  The measured wall time goes to
stderr only; the report's timing_ms field is null so identical configs
produce identical files regardless of machine or worker count.
"""

from __future__ import annotations

import concurrent.futures
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .attack_analysis import DefenderSetup
from .classifier import (
    CachedClassifier,
    Classifier,
    load_table_classifier,
    make_external_classifier,
    make_synthetic_classifier,
)
from .core import ConfigError, load_dataset
from .cross_check import CertificateRecord, certify
from .geometry import build_ablation_set, build_mask_set, build_patch_set
from .masking import MaskingContext
from .oracle import (
    Violation,
    default_alphabet,
    differential_report,
    validate_certificates,
    validate_nac_necessity,
)
from .voting import VotingContext

DEFENDERS = ("cc", "cc-base")


@dataclass(frozen=True)
class RunConfig:
    """Everything one certification or oracle run depends on."""

    dataset: str
    patch: int
    masks: int
    ablation: int
    classifier_h: str
    classifier_f: str
    defender: str = "cc"
    labels: int | None = None
    out: str | None = None
    alphabet_max: int | None = None
    include_sentinel: bool = True
    budget: int | None = 10_000_000
    allow_zero: bool = False
    differential: bool = False

    def validated(self) -> "RunConfig":
        if self.defender not in DEFENDERS + ("both",):
            raise ConfigError(f"defender must be one of {DEFENDERS}, got {self.defender!r}")
        for name in ("patch", "masks", "ablation"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        for spec in (self.classifier_h, self.classifier_f):
            kind = spec.split(":", 1)[0]
            if kind not in ("table", "synthetic", "extern"):
                raise ConfigError(f"unknown classifier spec {spec!r}")
        return self


@dataclass
class AccuracyReport:
    """The four accuracy fractions plus the per-sample records behind them."""

    counts: dict[str, int]
    acc_clean: str
    acc_cert_d: str
    acc_cert_u: str
    acc_cert_r: str
    records: list[CertificateRecord] = field(default_factory=list)

    def fraction(self, key: str) -> float:
        return self.counts[key] / self.counts["total"]


def format_fraction(numerator: int, denominator: int) -> str:
    """num/den as a decimal string with 6 fractional digits, round half to even."""
    if denominator <= 0:
        raise ConfigError("fraction denominator must be positive")
    scaled = numerator * 1_000_000
    q, r = divmod(scaled, denominator)
    if 2 * r > denominator or (2 * r == denominator and q % 2 == 1):
        q += 1
    return f"{q // 1_000_000}.{q % 1_000_000:06d}"


def compute_metrics(records: list[CertificateRecord], labels: list[int]) -> AccuracyReport:
    """The four accuracies; numerators require a correct prediction AND the flag."""
    if len(records) != len(labels):
        raise ConfigError(
            f"record/label count mismatch: {len(records)} records, {len(labels)} labels"
        )
    if not records:
        raise ConfigError("cannot compute metrics over an empty dataset")
    total = len(records)
    clean = cert_d = cert_u = cert_r = 0
    for rec, label in zip(records, labels):
        if rec.g != label:
            continue
        clean += 1
        cert_d += rec.c_d
        cert_u += rec.c_u
        cert_r += rec.c_r
    counts = {
        "total": total, "clean": clean,
        "cert_d": cert_d, "cert_u": cert_u, "cert_r": cert_r,
    }
    return AccuracyReport(
        counts=counts,
        acc_clean=format_fraction(clean, total),
        acc_cert_d=format_fraction(cert_d, total),
        acc_cert_u=format_fraction(cert_u, total),
        acc_cert_r=format_fraction(cert_r, total),
    )


def build_classifier(spec: str, labels: int | None,
                     dims: tuple[int, int] | None) -> Classifier:
    """Instantiate a classifier from its spec string, wrapped in a query cache.

    Grammar: ``table:PATH`` | ``synthetic:NAME`` | ``extern:CMDLINE``.
    """
    kind, _, arg = spec.partition(":")
    if kind == "table":
        inner = load_table_classifier(arg)
        if labels is not None and labels != inner.label_count:
            raise ConfigError(
                f"label count {labels} conflicts with table model's {inner.label_count}"
            )
    elif kind == "synthetic":
        if labels is None:
            raise ConfigError("synthetic classifiers need an explicit label count")
        inner = make_synthetic_classifier(arg, labels)
    elif kind == "extern":
        if labels is None:
            raise ConfigError("external classifiers need an explicit label count")
        inner = make_external_classifier(arg, labels, dims=dims)
    else:
        raise ConfigError(f"unknown classifier spec {spec!r}")
    return CachedClassifier(inner)


def build_setup(cfg: RunConfig, width: int, height: int) -> DefenderSetup:
    """Geometry first (cheap, validating), then the classifiers."""
    patches = build_patch_set(width, height, cfg.patch)
    masks = build_mask_set(width, height, cfg.patch, cfg.masks)
    bands = build_ablation_set(width, height, cfg.ablation)
    dims = (width, height)
    h = build_classifier(cfg.classifier_h, cfg.labels, dims)
    f = build_classifier(cfg.classifier_f, cfg.labels, dims)
    if h.label_count != f.label_count:
        raise ConfigError(
            f"base models disagree on label count: {h.label_count} vs {f.label_count}"
        )
    return DefenderSetup(
        masking=MaskingContext(h, masks),
        voting=VotingContext.build(f, bands, patches),
        patches=patches,
    )


def _clear_caches(setup: DefenderSetup) -> None:
    for clf in (setup.masking.h, setup.voting.f):
        if isinstance(clf, CachedClassifier):
            clf.cache.clear()


def worker_count() -> int:
    raw = os.environ.get("PATCHCERT_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"PATCHCERT_WORKERS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"PATCHCERT_WORKERS must be >= 1, got {n}")
    return n


# Worker-side state for the process pool: each worker loads the dataset and
# builds its own classifiers (external handles must not be shared across
# processes).
_WORKER: dict = {}


def _worker_init(cfg: RunConfig) -> None:
    entries = load_dataset(cfg.dataset, allow_zero=cfg.allow_zero)
    x0 = entries[0][1]
    _WORKER["entries"] = entries
    _WORKER["setup"] = build_setup(cfg, x0.width, x0.height)
    _WORKER["cfg"] = cfg


def _worker_task(job: tuple) -> object:
    kind, index, defender = job
    cfg: RunConfig = _WORKER["cfg"]
    setup: DefenderSetup = _WORKER["setup"]
    name, sample, _label = _WORKER["entries"][index]
    _clear_caches(setup)
    if kind == "certify":
        return certify(sample, defender, setup, name)
    alphabet = default_alphabet(sample, cfg.alphabet_max, cfg.include_sentinel)
    if kind == "validate":
        return validate_certificates(
            [(name, sample)], defender, setup, alphabet=alphabet, budget=cfg.budget
        )
    if kind == "nac":
        return validate_nac_necessity(
            [(name, sample)], setup, alphabet=alphabet, budget=cfg.budget
        )
    raise ConfigError(f"unknown worker job {kind!r}")


def _run_jobs(cfg: RunConfig, jobs: list[tuple]) -> list:
    """Run jobs serially or over a process pool; results keep job order."""
    workers = worker_count()
    if workers == 1:
        _worker_init(cfg)
        try:
            return [_worker_task(job) for job in jobs]
        finally:
            _WORKER.clear()
    with concurrent.futures.ProcessPoolExecutor(
        max_workers=workers, initializer=_worker_init, initargs=(cfg,)
    ) as pool:
        return list(pool.map(_worker_task, jobs, chunksize=1))


def _report_payload(cfg: RunConfig, setup_echo: dict, metrics: AccuracyReport | None,
                    records: list[CertificateRecord],
                    violations: list[Violation], extra: dict | None = None) -> dict:
    payload = {
        "config": setup_echo,
        "metrics": None if metrics is None else {
            "acc_clean": metrics.acc_clean,
            "acc_cert_d": metrics.acc_cert_d,
            "acc_cert_u": metrics.acc_cert_u,
            "acc_cert_r": metrics.acc_cert_r,
        },
        "records": [record_to_json(r) for r in records],
        "violations": [v.to_json() for v in violations],
        "timing_ms": None,
    }
    if extra:
        payload.update(extra)
    return payload


def record_to_json(rec: CertificateRecord) -> dict:
    out = {
        "sample": rec.sample_id,
        "defender": rec.defender,
        "g": rec.g,
        "v": rec.v,
        "c_u": rec.c_u,
        "c_d": rec.c_d,
        "c_r": rec.c_r,
        "provenance": rec.provenance,
        "g1": rec.g1,
        "g2": rec.g2,
        "c1": rec.c1,
        "c2": rec.c2,
        "case_alg1": rec.case_alg1,
        "case_alg2": rec.case_alg2,
        "att_r1": None if rec.att_r1 is None else [list(p) for p in rec.att_r1],
        "att_r2": None if rec.att_r2 is None else [list(p) for p in rec.att_r2],
    }
    return out


def _config_echo(cfg: RunConfig, setup: DefenderSetup, entries) -> dict:
    x0 = entries[0][1]
    return {
        "dataset": cfg.dataset,
        "patch": cfg.patch,
        "masks": cfg.masks,
        "ablation": cfg.ablation,
        "classifier_h": cfg.classifier_h,
        "classifier_f": cfg.classifier_f,
        "defender": cfg.defender,
        "labels": setup.masking.h.label_count,
        "frame": {"width": x0.width, "height": x0.height, "alphabet": x0.alphabet_size},
        "geometry": {
            "patch_count": len(setup.patches),
            "mask_count": len(setup.masking.masks),
            "mask_side": list(setup.masking.masks.mask_side),
            "band_count": len(setup.voting.bands),
            "delta": setup.voting.delta,
        },
        "samples": len(entries),
    }


def write_report(path, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text, encoding="ascii")


def run_certify(cfg: RunConfig) -> tuple[AccuracyReport, dict]:
    """Certify every dataset sample with the chosen defender; write the report."""
    cfg = cfg.validated()
    if cfg.defender not in DEFENDERS:
        raise ConfigError("certify needs --defender cc or cc-base")
    started = time.monotonic()
    entries = load_dataset(cfg.dataset, allow_zero=cfg.allow_zero)
    if not entries:
        raise ConfigError(f"dataset {cfg.dataset} is empty")
    x0 = entries[0][1]
    setup = build_setup(cfg, x0.width, x0.height)
    _validate_dataset_labels(entries, setup)
    jobs = [("certify", i, cfg.defender) for i in range(len(entries))]
    records = _run_jobs(cfg, jobs)
    metrics = compute_metrics(records, [label for _, _, label in entries])
    metrics.records = records
    payload = _report_payload(cfg, _config_echo(cfg, setup, entries), metrics, records, [])
    if cfg.out:
        write_report(cfg.out, payload)
    elapsed_ms = int((time.monotonic() - started) * 1000)
    print(f"certified {len(records)} samples in {elapsed_ms} ms", file=sys.stderr)
    return metrics, payload


def run_oracle(cfg: RunConfig) -> tuple[int, dict]:
    """Exhaustively validate certificates and attack conditions.

    Exit status: 0 clean, 1 violations found (budget overruns raise).
    """
    cfg = cfg.validated()
    started = time.monotonic()
    entries = load_dataset(cfg.dataset, allow_zero=cfg.allow_zero)
    if not entries:
        raise ConfigError(f"dataset {cfg.dataset} is empty")
    x0 = entries[0][1]
    setup = build_setup(cfg, x0.width, x0.height)
    _validate_dataset_labels(entries, setup)
    defenders = DEFENDERS if cfg.defender == "both" else (cfg.defender,)
    jobs: list[tuple] = []
    for defender in defenders:
        jobs += [("certify", i, defender) for i in range(len(entries))]
        jobs += [("validate", i, defender) for i in range(len(entries))]
    jobs += [("nac", i, "") for i in range(len(entries))]
    results = _run_jobs(cfg, jobs)
    records: list[CertificateRecord] = []
    violations: list[Violation] = []
    cursor = 0
    for defender in defenders:
        records.extend(results[cursor:cursor + len(entries)])
        cursor += len(entries)
        for batch in results[cursor:cursor + len(entries)]:
            violations.extend(batch)
        cursor += len(entries)
    for batch in results[cursor:]:
        violations.extend(batch)
    metric_records = records[:len(entries)]
    metrics = compute_metrics(metric_records, [label for _, _, label in entries])
    extra = {}
    if cfg.differential:
        samples = [(name, sample) for name, sample, _ in entries]
        alphabet = default_alphabet(x0, cfg.alphabet_max, cfg.include_sentinel)
        _clear_caches(setup)
        extra["differential"] = differential_report(
            samples, setup, alphabet=alphabet, budget=cfg.budget
        )
    payload = _report_payload(
        cfg, _config_echo(cfg, setup, entries), metrics, records, violations, extra
    )
    if cfg.out:
        write_report(cfg.out, payload)
    elapsed_ms = int((time.monotonic() - started) * 1000)
    print(
        f"oracle checked {len(entries)} samples, {len(violations)} violations, "
        f"{elapsed_ms} ms",
        file=sys.stderr,
    )
    return (1 if violations else 0), payload


def _validate_dataset_labels(entries, setup: DefenderSetup) -> None:
    label_count = setup.masking.h.label_count
    for name, _sample, label in entries:
        if label >= label_count:
            raise ConfigError(
                f"{name}: ground-truth label {label} outside [0, {label_count})"
            )


def predict_one(cfg: RunConfig, image_path: str) -> tuple[int, bool]:
    """Label and warning for a single sample file."""
    cfg = cfg.validated()
    from .core import load_sample
    from .cross_check import cc_base_predict, cc_predict

    x = load_sample(image_path, allow_zero=True)
    setup = build_setup(cfg, x.width, x.height)
    if cfg.defender == "cc":
        return cc_predict(x, setup)
    return cc_base_predict(x, setup)
