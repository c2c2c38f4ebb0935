"""Command-line front end.

Subcommands: certify (dataset -> report), predict (one sample -> label and
warning), oracle (exhaustive validation -> violations and exit status),
report (pretty-print a report file).

Exit codes: 0 success / clean oracle, 1 oracle violations, 2 usage or
configuration errors, 3 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys

from .core import BudgetExceededError, PatchCertError
from .harness import RunConfig, predict_one, run_certify, run_oracle

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_ERROR = 2
EXIT_BUDGET = 3


def _add_geometry_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--patch", type=int, required=True, help="patch side length")
    parser.add_argument("--masks", type=int, required=True, help="masks per axis")
    parser.add_argument("--ablation", type=int, required=True, help="ablation band width")
    parser.add_argument("--classifier-h", required=True,
                        help="masking base model: table:PATH | synthetic:NAME | extern:CMDLINE")
    parser.add_argument("--classifier-f", required=True,
                        help="voting base model: table:PATH | synthetic:NAME | extern:CMDLINE")
    parser.add_argument("--defender", choices=["cc", "cc-base"], default="cc")
    parser.add_argument("--labels", type=int, default=None,
                        help="label count (required for synthetic/extern models)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="patchcert")
    sub = parser.add_subparsers(dest="command", required=True)

    certify = sub.add_parser("certify", help="certify every sample of a dataset")
    certify.add_argument("--dataset", required=True)
    _add_geometry_args(certify)
    certify.add_argument("--out", required=True, help="report file to write")
    certify.add_argument("--allow-zero", action="store_true",
                         help="permit the 0 sentinel in benign dataset pixels")

    predict = sub.add_parser("predict", help="label one sample and report the warning flag")
    predict.add_argument("--image", required=True, help="sample file (SGF)")
    _add_geometry_args(predict)

    oracle = sub.add_parser("oracle", help="exhaustively validate certificates")
    oracle.add_argument("--dataset", required=True)
    _add_geometry_args(oracle)
    # oracle may check a single defender; the default cross-validates both
    oracle.set_defaults(defender="both")
    oracle.add_argument("--both", dest="defender", action="store_const", const="both",
                        help="validate both defenders (default)")
    oracle.add_argument("--alphabet-max", type=int, default=None,
                        help="top of the attack content alphabet (default: sample alphabet)")
    oracle.add_argument("--no-sentinel", action="store_true",
                        help="restrict attack contents to 1..A")
    oracle.add_argument("--budget", type=int, default=10_000_000,
                        help="maximum enumerated variants per sample")
    oracle.add_argument("--differential", action="store_true",
                        help="also record label disagreements between the two "
                             "masking prediction variants")
    oracle.add_argument("--out", default=None, help="violation report file")
    oracle.add_argument("--allow-zero", action="store_true")

    report = sub.add_parser("report", help="pretty-print a report file")
    report.add_argument("file")
    return parser


def _config_from_args(args, dataset: str = "", out: str | None = None) -> RunConfig:
    return RunConfig(
        dataset=dataset,
        patch=args.patch,
        masks=args.masks,
        ablation=args.ablation,
        classifier_h=args.classifier_h,
        classifier_f=args.classifier_f,
        defender=args.defender,
        labels=args.labels,
        out=out,
        alphabet_max=getattr(args, "alphabet_max", None),
        include_sentinel=not getattr(args, "no_sentinel", False),
        budget=getattr(args, "budget", None),
        allow_zero=getattr(args, "allow_zero", False),
        differential=getattr(args, "differential", False),
    )


def _print_report(path: str) -> int:
    try:
        with open(path, encoding="ascii") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise PatchCertError(f"{path}: cannot read report: {exc}") from exc
    config = payload.get("config", {})
    print(f"dataset: {config.get('dataset')}  defender: {config.get('defender')}")
    geometry = config.get("geometry", {})
    frame = config.get("frame", {})
    print(
        f"frame {frame.get('width')}x{frame.get('height')} alphabet {frame.get('alphabet')}  "
        f"patch {config.get('patch')}  masks {geometry.get('mask_count')}  "
        f"bands {geometry.get('band_count')}  delta {geometry.get('delta')}"
    )
    metrics = payload.get("metrics") or {}
    for key in ("acc_clean", "acc_cert_d", "acc_cert_u", "acc_cert_r"):
        print(f"{key}: {metrics.get(key)}")
    records = payload.get("records", [])
    print(f"records: {len(records)}")
    for rec in records:
        print(
            f"  {rec['sample']} [{rec['defender']}] g={rec['g']} v={rec['v']} "
            f"c_u={rec['c_u']} c_d={rec['c_d']} c_r={rec['c_r']} ({rec['provenance']})"
        )
    violations = payload.get("violations", [])
    print(f"violations: {len(violations)}")
    for v in violations:
        print(
            f"  {v['sample']} {v['kind']} [{v['defender']}] patch={v['patch_index']} "
            f"content={v['content']}: observed {v['observed']}, required {v['required']}"
        )
    if "differential" in payload:
        diff = payload["differential"]
        print(
            f"differential: {len(diff['disagreements'])} label disagreements "
            f"over {diff['checked']} predictions"
        )
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "certify":
            cfg = _config_from_args(args, dataset=args.dataset, out=args.out)
            run_certify(cfg)
            return EXIT_OK
        if args.command == "predict":
            cfg = _config_from_args(args)
            label, warning = predict_one(cfg, args.image)
            print(f"label={label} warning={'true' if warning else 'false'}")
            return EXIT_OK
        if args.command == "oracle":
            cfg = _config_from_args(args, dataset=args.dataset, out=args.out)
            status, _payload = run_oracle(cfg)
            return EXIT_VIOLATIONS if status else EXIT_OK
        if args.command == "report":
            return _print_report(args.file)
        raise AssertionError(f"unhandled command {args.command}")
    except BudgetExceededError as exc:
        print(f"patchcert: budget: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except PatchCertError as exc:
        print(f"patchcert: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
