"""Command-line front end.

Exit codes: 0 success, 1 domain error (error class name on stderr), 2 usage error.
Every stdout record is one line of space-separated ``key=value`` pairs.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import yaml

from .bench import DatasetSpec, load_suite, run_suite, write_dataset, write_report
from .bench.runner import BUNDLED_SUITES
from .config import load_config
from .core import MessagePayload, Modality, OperationMode, SecretKey
from .engine import WatermarkEngine
from .errors import BadSpec, PayloadLengthError, UnimarkError
from .media import AudioClip, ImageBuffer, VideoClip, load_media, save_media
from .metrics import image_quality, snr_db, video_quality

MODALITIES = [m.value for m in Modality]
OPERATIONS = [m.value for m in OperationMode]


class UsageError(Exception):
    pass


def _record(**fields) -> str:
    return " ".join(f"{k}={v}" for k, v in fields.items())


def _real(x) -> str:
    if x is None:
        return "-"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.6f}"


def _config(args):
    path = args.config or os.environ.get("UNIMARK_CONFIG") or None
    return load_config(path)


def _key(args) -> SecretKey:
    return SecretKey.from_string(args.key if args.key is not None else "")


def _quality(original, marked) -> dict:
    if isinstance(original, ImageBuffer):
        q = image_quality(original, marked)
        return {"psnr_db": _real(q.psnr_db), "ssim": _real(q.ssim)}
    if isinstance(original, VideoClip):
        q = video_quality(original, marked)
        return {"psnr_db": _real(q.psnr_db), "ssim": _real(q.ssim)}
    if isinstance(original, AudioClip) and original.samples.shape == marked.samples.shape:
        return {"snr_db": _real(snr_db(original, marked))}
    return {}


def cmd_embed(args) -> int:
    mode = OperationMode(args.operation)
    if mode is OperationMode.WATERMARK and (args.message is None or args.key is None):
        raise UsageError("watermark embedding needs --message and --key")
    if mode is OperationMode.VISIBLE_MARK and args.message is not None:
        raise UsageError("--message is not accepted with --operation visible_mark")
    try:
        payload = MessagePayload.from_hex(args.message) if args.message is not None else None
    except PayloadLengthError as exc:
        raise UsageError(f"bad --message: {exc}") from None
    engine = WatermarkEngine(_config(args))
    media = load_media(args.input, args.modality)
    marked = engine.embed(media, mode, payload, _key(args))
    save_media(marked, args.output)
    fields = {
        "modality": args.modality,
        "mode": mode.value,
        "payload_bits": len(payload) if payload else 0,
        **_quality(media, marked),
        "out": args.output,
    }
    print(_record(**fields))
    return 0


def _segments(segs) -> str:
    if not segs:
        return "-"
    return ",".join(f"{a}:{b}" for a, b in segs)


def cmd_extract(args) -> int:
    mode = OperationMode(args.operation)
    engine = WatermarkEngine(_config(args))
    media = load_media(args.input, args.modality)
    res = engine.extract(media, mode, _key(args), args.bits)
    print(
        _record(
            detected="true" if res.detected else "false",
            confidence=_real(res.confidence),
            bits=res.hex or "-",
            segments=_segments(res.segments),
        )
    )
    return 0


def cmd_bench_run(args) -> int:
    if not Path(args.suite).exists() and args.suite not in BUNDLED_SUITES:
        raise UsageError(f"suite file not found: {args.suite}")
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    cfg = _config(args)
    suite = load_suite(args.suite)
    if args.seed is not None:
        suite = suite.with_seed(args.seed)
    report = run_suite(suite, WatermarkEngine(cfg), jobs=args.jobs)
    out = Path(args.out or cfg.bench.output_dir)
    write_report(report, out)
    row = report.row("none")
    print(
        _record(
            suite=suite.name,
            attack="none",
            bit_accuracy=_real(row.bit_accuracy),
            tpr=_real(row.tpr),
            fpr=_real(row.fpr),
            n=row.n_positive,
            out=out,
        )
    )
    return 0


def cmd_bench_dataset(args) -> int:
    path = Path(args.spec)
    if not path.exists():
        raise UsageError(f"spec file not found: {args.spec}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise BadSpec(f"spec parse error: {exc}") from None
    if isinstance(data, dict) and isinstance(data.get("dataset"), dict):
        # a whole suite file: use its dataset block
        data = {"modality": data.get("modality"), "seed": data.get("seed", 42), **data["dataset"]}
    spec = DatasetSpec.from_dict(data)
    manifest = write_dataset(spec, args.out)
    print(_record(modality=spec.modality.value, items=spec.count, manifest=manifest))
    return 0


def cmd_config_show(args) -> int:
    cfg = _config(args)
    sys.stdout.write(cfg.to_yaml())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unimark", description="Embed, extract and benchmark watermarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def media_flags(p):
        p.add_argument("--modality", required=True, choices=MODALITIES)
        p.add_argument("--operation", required=True, choices=OPERATIONS)
        p.add_argument("--in", dest="input", required=True, metavar="PATH")
        p.add_argument("--key", help="secret key string (hashed to a 64-bit seed)")
        p.add_argument("--config", metavar="PATH", help="config file (default: $UNIMARK_CONFIG)")

    p = sub.add_parser("embed", help="embed a watermark or visible mark")
    media_flags(p)
    p.add_argument("--out", dest="output", required=True, metavar="PATH")
    p.add_argument("--message", metavar="HEX", help="payload as hex, MSB first")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("extract", help="detect and decode a mark")
    media_flags(p)
    p.add_argument("--bits", type=int, metavar="N", help="payload length to decode (default per modality)")
    p.set_defaults(func=cmd_extract)

    bench = sub.add_parser("bench", help="benchmark tools").add_subparsers(dest="bench_command", required=True)
    p = bench.add_parser("run", help="run a benchmark suite")
    p.add_argument("--suite", required=True, metavar="PATH", help=f"suite file or one of {', '.join(BUNDLED_SUITES)}")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--config", metavar="PATH")
    p.set_defaults(func=cmd_bench_run)
    p = bench.add_parser("dataset", help="write a synthetic dataset")
    p.add_argument("--spec", required=True, metavar="PATH")
    p.add_argument("--out", required=True, metavar="DIR")
    p.set_defaults(func=cmd_bench_dataset)

    cfg = sub.add_parser("config", help="configuration tools").add_subparsers(dest="config_command", required=True)
    p = cfg.add_parser("show", help="print the effective configuration")
    p.add_argument("--config", metavar="PATH")
    p.set_defaults(func=cmd_config_show)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on bad flags
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"unimark: error: {exc}", file=sys.stderr)
        return 2
    except UnimarkError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
