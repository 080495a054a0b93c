import io
import json
import struct
import wave
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from unimark.errors import DecodeError, InconsistentFrames, IoError, NotSingleFrame, UnsupportedFormat
from unimark.media import (
    AudioClip,
    ImageBuffer,
    TextDocument,
    VideoClip,
    clip_as_image,
    decode_image,
    decode_wav,
    encode_image,
    encode_wav,
    image_as_clip,
    load_image,
    load_media,
    load_text,
    load_video,
    load_wav,
    save_image,
    save_text,
    save_video,
    save_wav,
)

from conftest import noise_image, sine


def test_ppm_handcrafted(tmp_path):
    body = bytes([0, 0, 0, 255, 255, 255, 10, 20, 30, 40, 50, 60])
    path = tmp_path / "x.ppm"
    path.write_bytes(b"P6\n2 2\n255\n" + body)
    img = load_image(path)
    assert img.pixels.shape == (2, 2, 3)
    assert img.pixels.tobytes() == body


def test_ppm_comment_and_pgm(tmp_path):
    path = tmp_path / "x.pgm"
    path.write_bytes(b"P5\n# a comment\n1 1\n255\n" + bytes([128]))
    img = load_image(path)
    assert img.pixels.shape == (1, 1, 1) and int(img.pixels[0, 0, 0]) == 128


@pytest.mark.parametrize(
    "blob",
    [b"P6\n2 2", b"P6\n2 2\n255\n\x00\x01", b"P6\n2 2\n65535\n" + bytes(24), b"", b"\x89PNG\r\n\x1a\n", b"garbage"],
)
def test_malformed_images(blob):
    with pytest.raises(DecodeError):
        decode_image(blob)


def test_png_16bit_rejected():
    buf = io.BytesIO()
    Image.fromarray(np.zeros((4, 4), dtype=np.uint16)).save(buf, format="PNG")
    with pytest.raises(UnsupportedFormat):
        decode_image(buf.getvalue())


def test_png_rgba_rejected():
    buf = io.BytesIO()
    Image.fromarray(np.zeros((4, 4, 4), dtype=np.uint8)).save(buf, format="PNG")
    with pytest.raises(UnsupportedFormat):
        decode_image(buf.getvalue())


@pytest.mark.parametrize("fmt", ["png", "ppm"])
@pytest.mark.parametrize("channels", [1, 3])
def test_image_round_trip(tmp_path, rng, fmt, channels):
    img = noise_image(rng, 16, 16, channels)
    path = tmp_path / f"x.{fmt}"
    save_image(img, path)
    assert load_image(path) == img


def test_one_by_one_gray(tmp_path):
    img = ImageBuffer(np.array([[[77]]], dtype=np.uint8))
    save_image(img, tmp_path / "p.png")
    assert load_image(tmp_path / "p.png") == img


def test_save_unwritable(tmp_path, rng):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(IoError):
        save_image(noise_image(rng, 4, 4), blocker / "sub" / "x.png")


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.sampled_from([1, 3]), st.sampled_from(["png", "ppm"]), st.data())
def test_image_round_trip_property(h, w, c, fmt, data):
    raw = data.draw(st.binary(min_size=h * w * c, max_size=h * w * c))
    img = ImageBuffer(np.frombuffer(raw, dtype=np.uint8).reshape(h, w, c))
    assert decode_image(encode_image(img, fmt)) == img


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=256))
def test_image_decoder_fuzz(blob):
    try:
        decode_image(blob)
    except DecodeError:
        pass


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=256))
def test_wav_decoder_fuzz(blob):
    try:
        decode_wav(blob)
    except DecodeError:
        pass


@settings(max_examples=100, deadline=None)
@given(st.binary(min_size=8, max_size=64))
def test_png_prefixed_fuzz(tail):
    try:
        decode_image(b"\x89PNG\r\n\x1a\n" + tail)
    except DecodeError:
        pass


def test_video_round_trip(tmp_path, rng):
    clip = VideoClip([noise_image(rng, 8, 12) for _ in range(3)], Fraction(25, 2))
    manifest = save_video(clip, tmp_path / "v")
    back = load_video(manifest)
    assert back.fps == clip.fps
    assert all(a == b for a, b in zip(back.frames, clip.frames)) and len(back.frames) == 3
    data = json.loads(manifest.read_text())
    assert set(data) == {"fps", "frames"}


def test_video_single_frame_and_dir_path(tmp_path, rng):
    clip = VideoClip([noise_image(rng, 5, 5)], 1)
    save_video(clip, tmp_path / "v")
    assert load_video(tmp_path / "v").frames[0] == clip.frames[0]


def test_video_missing_frame(tmp_path, rng):
    save_video(VideoClip([noise_image(rng, 5, 5)] * 2, 1), tmp_path / "v")
    (tmp_path / "v" / "frame_0001.png").unlink()
    with pytest.raises(DecodeError):
        load_video(tmp_path / "v" / "manifest.json")


def test_video_inconsistent_frames(rng):
    with pytest.raises(InconsistentFrames):
        VideoClip([noise_image(rng, 5, 5), noise_image(rng, 6, 5)], 1)


def _pcm_wav(values, rate=16000, channels=1):
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(channels)
        wf.setsampwidth(2)
        wf.setframerate(rate)
        wf.writeframes(struct.pack(f"<{len(values)}h", *values))
    return buf.getvalue()


def test_wav_scaling():
    clip = decode_wav(_pcm_wav([32767, -32768, 0]))
    assert clip.samples[0, 0] == 32767 / 32768
    assert clip.samples[0, 1] == -1.0
    assert clip.samples[0, 2] == 0.0


def test_wav_stereo_planar():
    clip = decode_wav(_pcm_wav([1, 2, 3, 4], channels=2))
    assert clip.channels == 2
    assert np.array_equal(clip.samples * 32768, [[1, 3], [2, 4]])


def test_wav_non_pcm16_rejected():
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(1)
        wf.setframerate(16000)
        wf.writeframes(bytes(10))
    with pytest.raises(UnsupportedFormat):
        decode_wav(buf.getvalue())
    data = bytearray(_pcm_wav([0, 0]))
    data[20:22] = struct.pack("<H", 3)  # IEEE float format tag
    with pytest.raises(UnsupportedFormat):
        decode_wav(bytes(data))


def test_wav_idempotent_and_quantization_bound(tmp_path):
    clip = sine(440.0, 1.0, 16000, 0.9)
    save_wav(clip, tmp_path / "a.wav")
    once = load_wav(tmp_path / "a.wav")
    assert np.max(np.abs(once.samples - clip.samples)) <= 1 / 32768
    save_wav(once, tmp_path / "b.wav")
    assert np.array_equal(load_wav(tmp_path / "b.wav").samples, once.samples)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-32768, 32767), min_size=1, max_size=64))
def test_wav_pcm_round_trip_property(values):
    clip = decode_wav(_pcm_wav(values))
    assert np.array_equal(decode_wav(encode_wav(clip)).samples, clip.samples)


def test_audio_invariants():
    with pytest.raises(ValueError):
        AudioClip(np.array([0.0, 2.0]), 16000)
    with pytest.raises(ValueError):
        AudioClip(np.zeros(4), 4000)


def test_text_round_trip(tmp_path):
    d = TextDocument("héllo wörld\nline two")
    save_text(d, tmp_path / "t.txt")
    assert load_text(tmp_path / "t.txt") == d
    (tmp_path / "bad.txt").write_bytes(b"\xff\xfe\x00")
    with pytest.raises(DecodeError):
        load_text(tmp_path / "bad.txt")


def test_image_clip_inverse_pair(rng):
    img = noise_image(rng, 64, 64)
    clip = image_as_clip(img)
    assert len(clip.frames) == 1 and clip.fps == 1
    assert clip.frames[0].pixels.tobytes() == img.pixels.tobytes()
    assert clip_as_image(clip) == img
    with pytest.raises(NotSingleFrame):
        clip_as_image(VideoClip([img, img], 1))


def test_wrong_modality_is_decode_error(tmp_path, rng):
    save_image(noise_image(rng, 4, 4), tmp_path / "x.png")
    with pytest.raises(DecodeError):
        load_media(tmp_path / "x.png", "audio")
    with pytest.raises(DecodeError):
        load_media(tmp_path / "missing.png", "image")
