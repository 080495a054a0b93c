"""Report serialization: report.json, report.md and radar.svg."""

from __future__ import annotations

import json
import math
from pathlib import Path
from xml.sax.saxutils import escape

from ..attacks import AttackSpec
from ..errors import IoError
from .runner import LPIPS_REASON, AttackRow, BenchmarkReport

RADAR_SIZE = 600
RADAR_RADIUS = 220.0
RADAR_CENTER = (300.0, 320.0)
RADAR_SUBTITLE = "mean bit accuracy per attack"


def _num(x) -> str:
    if x is None:
        return "null"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return f"{x:.6f}"


def _value(v) -> str:
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    return _num(v)


def _obj(pairs, indent: int) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if not pairs:
        return "{}"
    body = ",\n".join(f"{inner}{json.dumps(k)}: {v}" for k, v in pairs)
    return "{\n" + body + "\n" + pad + "}"


def _row_json(row: AttackRow, indent: int) -> str:
    attack = _obj(
        [
            ("name", _value(row.attack.name)),
            ("params", _obj([(k, _value(v)) for k, v in sorted(row.attack.params.items())], indent + 2)),
            ("seed", _num(row.attack.seed)),
        ],
        indent + 1,
    )
    quality = _obj(
        [
            ("psnr_db", _num(row.psnr_db)),
            ("ssim", _num(row.ssim)),
            ("snr_db", _num(row.snr_db)),
            ("lpips", "null"),
            ("lpips_reason", _value(LPIPS_REASON)),
        ],
        indent + 1,
    )
    robustness = _obj(
        [
            ("bit_accuracy", _num(row.bit_accuracy)),
            ("tpr", _num(row.tpr)),
            ("fpr", _num(row.fpr)),
            ("n_positive", _num(row.n_positive)),
            ("n_negative", _num(row.n_negative)),
        ],
        indent + 1,
    )
    return _obj([("attack", attack), ("quality", quality), ("robustness", robustness)], indent)


def report_to_json(report: BenchmarkReport) -> str:
    """Byte-stable JSON: fixed key order, six-decimal reals, ``"inf"`` for infinities."""
    meta = _obj([(k, _value(report.meta[k])) for k in ("suite", "seed", "config_digest", "version", "timestamp")], 1)
    rows = ",\n".join("    " + _row_json(r, 2) for r in report.rows)
    rows_block = "[\n" + rows + "\n  ]" if report.rows else "[]"
    return "{\n" + f'  "meta": {meta},\n  "rows": {rows_block}\n' + "}\n"


def _parse_num(v):
    if v == "inf":
        return math.inf
    if v == "-inf":
        return -math.inf
    return v


def report_from_json(text: str) -> BenchmarkReport:
    data = json.loads(text)
    rows = []
    for r in data["rows"]:
        a, q, s = r["attack"], r["quality"], r["robustness"]
        rows.append(
            AttackRow(
                attack=AttackSpec(a["name"], dict(a["params"]), a["seed"]),
                psnr_db=_parse_num(q["psnr_db"]),
                ssim=q["ssim"],
                snr_db=_parse_num(q["snr_db"]),
                bit_accuracy=s["bit_accuracy"],
                tpr=s["tpr"],
                fpr=s["fpr"],
                n_positive=s["n_positive"],
                n_negative=s["n_negative"],
            )
        )
    return BenchmarkReport(dict(data["meta"]), rows)


def _cell(x, digits: int) -> str:
    if x is None:
        return "-"
    if math.isinf(x):
        return "inf"
    return f"{x:.{digits}f}"


def report_to_markdown(report: BenchmarkReport) -> str:
    m = report.meta
    lines = [
        f"# Benchmark report: {m['suite']}",
        "",
        f"seed {m['seed']}, version {m['version']}, config `{m['config_digest'][:12]}`, {m['timestamp']}",
        "",
        "| attack | bit accuracy | TPR | FPR | PSNR (dB) | SSIM | SNR (dB) | n |",
        "|---|---|---|---|---|---|---|---|",
    ]
    for r in report.rows:
        lines.append(
            f"| {r.attack.label()} | {r.bit_accuracy:.4f} | {r.tpr:.4f} | {r.fpr:.4f} | "
            f"{_cell(r.psnr_db, 2)} | {_cell(r.ssim, 4)} | {_cell(r.snr_db, 2)} | {r.n_positive} |"
        )
    lines += ["", "Quality columns compare un-attacked embeds against their originals.", ""]
    return "\n".join(lines)


def radar_points(values) -> list[tuple[float, float]]:
    cx, cy = RADAR_CENTER
    n = len(values)
    pts = []
    for k, v in enumerate(values):
        theta = -math.pi / 2 + 2 * math.pi * k / n
        r = RADAR_RADIUS * min(max(v, 0.0), 1.0)
        pts.append((cx + r * math.cos(theta), cy + r * math.sin(theta)))
    return pts


def report_to_svg(report: BenchmarkReport) -> str:
    cx, cy = RADAR_CENTER
    labels = [r.attack.label() for r in report.rows]
    values = [r.bit_accuracy for r in report.rows]
    n = len(labels)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{RADAR_SIZE}" height="{RADAR_SIZE}" '
        f'viewBox="0 0 {RADAR_SIZE} {RADAR_SIZE}" font-family="sans-serif">',
        f'<rect width="{RADAR_SIZE}" height="{RADAR_SIZE}" fill="white"/>',
        f'<text x="{cx:.0f}" y="28" text-anchor="middle" font-size="18">{escape(str(report.meta["suite"]))}</text>',
        f'<text class="subtitle" x="{cx:.0f}" y="48" text-anchor="middle" font-size="12" fill="#555">{RADAR_SUBTITLE}</text>',
    ]
    for level in (0.25, 0.5, 0.75, 1.0):
        ring = radar_points([level] * max(n, 3)) if n >= 3 else None
        if ring:
            pts = " ".join(f"{x:.3f},{y:.3f}" for x, y in ring)
            out.append(f'<polygon class="ring" points="{pts}" fill="none" stroke="#ddd"/>')
        else:
            out.append(f'<circle class="ring" cx="{cx}" cy="{cy}" r="{RADAR_RADIUS * level:.3f}" fill="none" stroke="#ddd"/>')
    for (x, y), label in zip(radar_points([1.0] * n), labels):
        out.append(f'<line class="axis" x1="{cx:.3f}" y1="{cy:.3f}" x2="{x:.3f}" y2="{y:.3f}" stroke="#999"/>')
        lx = cx + (x - cx) * 1.09
        ly = cy + (y - cy) * 1.09
        anchor = "middle" if abs(lx - cx) < 1 else ("start" if lx > cx else "end")
        out.append(
            f'<text class="axis-label" x="{lx:.3f}" y="{ly:.3f}" text-anchor="{anchor}" font-size="11">{escape(label)}</text>'
        )
    if n:
        pts = " ".join(f"{x:.3f},{y:.3f}" for x, y in radar_points(values))
        out.append(f'<polygon class="score" points="{pts}" fill="rgba(40,110,200,0.25)" stroke="#286ec8" stroke-width="2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_report(report: BenchmarkReport, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    files = {
        "json": (out / "report.json", report_to_json(report)),
        "markdown": (out / "report.md", report_to_markdown(report)),
        "svg": (out / "radar.svg", report_to_svg(report)),
    }
    try:
        out.mkdir(parents=True, exist_ok=True)
        for path, text in files.values():
            path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write report to {out}: {exc}") from exc
    return {k: p for k, (p, _) in files.items()}
