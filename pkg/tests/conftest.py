import sys

import numpy as np
import pytest

from unimark.config import load_config
from unimark.engine import WatermarkEngine
from unimark.media import AudioClip, ImageBuffer, TextDocument


@pytest.fixture
def engine():
    return WatermarkEngine(load_config())


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def noise_image(rng, h=64, w=64, c=3):
    return ImageBuffer(rng.integers(0, 256, size=(h, w, c), dtype=np.uint8))


def sine(freq=440.0, seconds=1.0, rate=16000, amp=0.5):
    t = np.arange(int(seconds * rate)) / rate
    return AudioClip(amp * np.sin(2 * np.pi * freq * t), rate)


def doc(n):
    return TextDocument(" ".join(f"Sentence number {i} talks about the weather." for i in range(n)))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
