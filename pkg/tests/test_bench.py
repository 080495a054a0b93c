import math
import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from unimark.attacks import AttackSpec
from unimark.bench import (
    DatasetSpec,
    SuiteSpec,
    generate_dataset,
    load_suite,
    report_from_json,
    report_to_json,
    run_suite,
    suite_from_dict,
    write_dataset,
    write_report,
)
from unimark.bench.report import RADAR_CENTER, RADAR_RADIUS, report_to_svg
from unimark.errors import BadSpec
from unimark.media import load_image

SVG = "{http://www.w3.org/2000/svg}"


def strip_timestamp(text):
    return re.sub(r'"timestamp": "[^"]*"', '"timestamp": ""', text)


def image_suite(attacks, count=3, size=256):
    return SuiteSpec("t", "image", DatasetSpec("image", count=count, size=size), tuple(attacks))


def test_dataset_deterministic_and_shaped():
    spec = DatasetSpec("image", count=20, size=256)
    a, b = generate_dataset(spec), generate_dataset(spec)
    assert all(x == y for x, y in zip(a, b))
    assert len(a) == 20 and all(x.pixels.shape == (256, 256, 3) for x in a)
    assert len({x.pixels.tobytes() for x in a}) == 20


def test_audio_dataset_capacity():
    clip = generate_dataset(DatasetSpec("audio", count=1))[0]
    assert clip.samples.shape[-1] == 240000 >= 48 * 4096


def test_video_and_text_items():
    v = generate_dataset(DatasetSpec("video", count=2, size=64, frames=16))
    assert all(len(c.frames) == 16 for c in v)
    t = generate_dataset(DatasetSpec("text", count=2, sentences=24))
    assert all(len(re.findall(r"[.!?]", d.content)) >= 24 for d in t)


def test_write_dataset(tmp_path):
    manifest = write_dataset(DatasetSpec("image", count=2, size=32), tmp_path)
    assert manifest == tmp_path / "dataset.json" and manifest.exists()
    assert load_image(tmp_path / "item_0000.png").pixels.shape == (32, 32, 3)


@pytest.mark.parametrize(
    "bad",
    [
        {"modality": "image", "attacks": [{"name": "nope"}]},
        {"modality": "image", "attacks": [{"name": "jpeg_sim", "params": {"quality": 0}}]},
        {"modality": "image", "attacks": [{"name": "frame_drop", "params": {"p": 0.5}}]},
        {"modality": "image", "dataset": {"count": 0}},
        {"modality": "image", "bogus": 1},
        {"attacks": []},
        {"modality": "image", "attacks": [{"name": "jpeg_sim", "params": {"quality": 90}}] * 2},
    ],
)
def test_bad_specs(bad):
    with pytest.raises(BadSpec):
        suite_from_dict(bad)


def test_identity_injected_and_perfect(engine):
    report = run_suite(image_suite([]), engine)
    assert [r.attack.name for r in report.rows] == ["none"]
    row = report.row("none")
    assert row.bit_accuracy == 1.0 and row.tpr == 1.0 and row.fpr == 0.0
    assert row.psnr_db >= 45 and row.ssim >= 0.98


def test_parallel_determinism(engine):
    suite = image_suite([AttackSpec("jpeg_sim", {"quality": 70}), AttackSpec("gauss_noise", {"sigma": 2.0}, 3)], count=4)
    one = report_to_json(run_suite(suite, engine, jobs=1))
    eight = report_to_json(run_suite(suite, engine, jobs=8))
    assert strip_timestamp(one) == strip_timestamp(eight)


def test_seed_changes_results(engine):
    suite = image_suite([], count=2)
    a = report_to_json(run_suite(suite, engine))
    b = report_to_json(run_suite(suite.with_seed(7), engine))
    assert strip_timestamp(a) != strip_timestamp(b)


def test_json_round_trip(engine):
    report = run_suite(image_suite([AttackSpec("center_crop", {"ratio": 0.5})], count=2), engine)
    text = report_to_json(report)
    back = report_from_json(text)
    assert back.meta == report.meta
    assert back.rows == report.rows or report_to_json(back) == text
    assert report_to_json(back) == text


def test_svg_axes_and_radius(engine, tmp_path):
    suite = image_suite([AttackSpec("jpeg_sim", {"quality": 50}), AttackSpec("gauss_blur", {"sigma": 2.0})], count=2)
    report = run_suite(suite, engine)
    svg = report_to_svg(report)
    root = ET.fromstring(svg)
    axes = [e for e in root.iter(f"{SVG}line") if e.get("class") == "axis"]
    assert len(axes) == 3
    poly = next(e for e in root.iter(f"{SVG}polygon") if e.get("class") == "score")
    x, y = (float(v) for v in poly.get("points").split()[0].split(","))
    assert math.hypot(x - RADAR_CENTER[0], y - RADAR_CENTER[1]) == pytest.approx(RADAR_RADIUS, abs=1e-3)
    files = write_report(report, tmp_path / "out")
    assert {p.name for p in files.values()} == {"report.json", "report.md", "radar.svg"}
    md = (tmp_path / "out" / "report.md").read_text()
    assert "jpeg_sim(quality=50)" in md


def test_bundled_suites_load():
    for name in ("image_default", "video_default", "audio_default", "text_default"):
        suite = load_suite(name)
        assert suite.attacks[0].name == "none"


def test_jpeg90_regression(engine):
    suite = load_suite("image_default")
    suite = SuiteSpec(suite.name, suite.modality, suite.dataset, (AttackSpec("jpeg_sim", {"quality": 90}),), 1, 42, 64)
    row = run_suite(suite, engine).row("jpeg_sim")
    assert row.bit_accuracy >= 0.95
    assert row.n_positive == 20 and row.n_negative == 20
