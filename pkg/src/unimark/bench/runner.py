"""Suite loading and the attack, detect, score loop."""

from __future__ import annotations

import datetime as _dt
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .. import __version__
from ..attacks import IDENTITY, AttackSpec, apply_attack, validate_attack
from ..core import ExtractionResult, MessagePayload, Modality, OperationMode, SecretKey
from ..errors import BadParams, BadSpec, BenchmarkError, CapacityExceeded, UnimarkError, UnknownAttack
from ..keys import derive_seed
from ..media import AudioClip, ImageBuffer, VideoClip
from ..metrics import bit_accuracy, image_quality, snr_db, video_quality
from .dataset import DatasetSpec, generate_item

LPIPS_REASON = "learned perceptual metric not bundled; requires pretrained network weights"
BUNDLED_SUITES = ("image_default", "video_default", "audio_default", "text_default")


@dataclass(frozen=True)
class SuiteSpec:
    name: str
    modality: Modality
    dataset: DatasetSpec
    attacks: tuple[AttackSpec, ...]
    trials: int = 1
    seed: int = 42
    payload_bits: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "modality", Modality(self.modality))
        if self.dataset.modality is not self.modality:
            raise BadSpec("dataset modality differs from suite modality")
        if not 1 <= self.trials <= 10_000:
            raise BadSpec("trials must be 1..10000")
        if not 0 <= self.seed < 1 << 64:
            raise BadSpec("seed must be a 64-bit unsigned integer")
        if self.payload_bits is not None and not 1 <= self.payload_bits <= 256:
            raise BadSpec("payload_bits must be 1..256")
        attacks = tuple(self.attacks)
        if not any(a.name == IDENTITY.name for a in attacks):
            attacks = (IDENTITY, *attacks)
        labels = [a.label() for a in attacks]
        if len(set(labels)) != len(labels):
            raise BadSpec("duplicate attack entries")
        normalized = []
        for a in attacks:
            try:
                params = validate_attack(a, self.modality)
            except (UnknownAttack, BadParams) as exc:
                raise BadSpec(str(exc)) from None
            normalized.append(AttackSpec(a.name, params, a.seed))
        object.__setattr__(self, "attacks", tuple(normalized))

    def with_seed(self, seed: int) -> "SuiteSpec":
        ds = DatasetSpec(**{**self.dataset.to_dict(), "seed": seed})
        return SuiteSpec(self.name, self.modality, ds, self.attacks, self.trials, seed, self.payload_bits)


_SUITE_KEYS = {"name", "modality", "dataset", "attacks", "trials", "seed", "payload_bits"}


def suite_from_dict(data: dict, default_name: str = "suite", default_trials: int = 1) -> SuiteSpec:
    if not isinstance(data, dict):
        raise BadSpec("suite file must hold a mapping")
    unknown = set(data) - _SUITE_KEYS
    if unknown:
        raise BadSpec(f"unknown suite keys: {sorted(unknown)}")
    if "modality" not in data:
        raise BadSpec("suite needs a modality")
    seed = int(data.get("seed", 42))
    dataset = DatasetSpec.from_dict(data.get("dataset") or {}, modality=data["modality"], seed=seed)
    raw_attacks = data.get("attacks") or []
    if not isinstance(raw_attacks, list):
        raise BadSpec("attacks must be a list")
    try:
        attacks = tuple(AttackSpec.from_dict(a) for a in raw_attacks)
    except BadParams as exc:
        raise BadSpec(str(exc)) from None
    try:
        return SuiteSpec(
            name=str(data.get("name", default_name)),
            modality=data["modality"],
            dataset=dataset,
            attacks=attacks,
            trials=int(data.get("trials", default_trials)),
            seed=seed,
            payload_bits=data.get("payload_bits"),
        )
    except ValueError as exc:
        raise BadSpec(str(exc)) from None


def load_suite(path) -> SuiteSpec:
    """Load a suite file; a bare bundled name such as ``image_default`` also works."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED_SUITES:
        text = resources.files("unimark").joinpath("benchmarks", f"{path}.yaml").read_text()
    else:
        text = p.read_text()  # OSError surfaces to the caller
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise BadSpec(f"suite parse error: {exc}") from None
    return suite_from_dict(data, default_name=p.stem)


@dataclass(frozen=True)
class AttackRow:
    attack: AttackSpec
    psnr_db: float | None
    ssim: float | None
    snr_db: float | None
    bit_accuracy: float
    tpr: float
    fpr: float
    n_positive: int
    n_negative: int


@dataclass
class BenchmarkReport:
    meta: dict
    rows: list[AttackRow] = field(default_factory=list)

    def row(self, name: str) -> AttackRow:
        return next(r for r in self.rows if r.attack.name == name)


@dataclass(frozen=True)
class _Task:
    item: int
    trial: int
    index: int
    key: SecretKey
    payload: MessagePayload
    attack_seeds: tuple[int, ...]
    control_seeds: tuple[int, ...]


@dataclass(frozen=True)
class _Outcome:
    quality: tuple[float | None, float | None, float | None]
    accuracy: tuple[float, ...]
    detected: tuple[bool, ...]
    control_detected: tuple[bool, ...]


def _plan(suite: SuiteSpec, nbits: int) -> list[_Task]:
    tasks = []
    for item in range(suite.dataset.count):
        for trial in range(suite.trials):
            idx = item * suite.trials + trial
            tasks.append(
                _Task(
                    item=item,
                    trial=trial,
                    index=idx,
                    key=SecretKey(derive_seed(suite.seed, "bench-key", idx)),
                    payload=MessagePayload.random(nbits, suite.seed, "bench-payload", idx),
                    attack_seeds=tuple(derive_seed(a.seed, f"bench-attack:{suite.seed}", idx) for a in suite.attacks),
                    control_seeds=tuple(derive_seed(a.seed, f"bench-control:{suite.seed}", idx) for a in suite.attacks),
                )
            )
    return tasks


def _quality(original, marked):
    if isinstance(original, ImageBuffer):
        q = image_quality(original, marked)
        return q.psnr_db, q.ssim, None
    if isinstance(original, VideoClip):
        q = video_quality(original, marked)
        return q.psnr_db, q.ssim, None
    if isinstance(original, AudioClip):
        return None, None, snr_db(original, marked)
    return None, None, None


def _extract(engine, media, key, nbits) -> ExtractionResult:
    try:
        return engine.extract(media, OperationMode.WATERMARK, key, nbits)
    except CapacityExceeded:
        # an attack shrank the carrier below capacity: count it as a miss
        return ExtractionResult(False, 0.0, tuple([0] * nbits))


def _run_task(suite: SuiteSpec, engine, nbits: int, task: _Task, item) -> _Outcome:
    attack = None
    try:
        marked = engine.embed(item, OperationMode.WATERMARK, task.payload, task.key)
        quality = _quality(item, marked)
        accuracy, detected, controls = [], [], []
        for a, s_att, s_ctl in zip(suite.attacks, task.attack_seeds, task.control_seeds):
            attack = a
            res = _extract(engine, apply_attack(marked, AttackSpec(a.name, a.params, s_att)), task.key, nbits)
            bits = res.bits if res.bits is not None else (0,) * nbits
            accuracy.append(bit_accuracy(task.payload.bits, bits))
            detected.append(res.detected)
            ctl = _extract(engine, apply_attack(item, AttackSpec(a.name, a.params, s_ctl)), task.key, nbits)
            controls.append(ctl.detected)
    except UnimarkError as exc:
        where = attack.label() if attack is not None else "embed"
        raise BenchmarkError(
            f"item {task.item} trial {task.trial} attack {where}: {type(exc).__name__}: {exc}",
            item=task.item,
            attack=where,
        ) from exc
    return _Outcome(quality, tuple(accuracy), tuple(detected), tuple(controls))


def _mean_finite(values) -> float | None:
    values = [v for v in values if v is not None]
    if not values:
        return None
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return math.inf
    return math.fsum(finite) / len(finite)


def _aggregate(suite: SuiteSpec, outcomes: list[_Outcome]) -> list[AttackRow]:
    n = len(outcomes)
    psnr = _mean_finite(o.quality[0] for o in outcomes)
    ssim = _mean_finite(o.quality[1] for o in outcomes)
    snr = _mean_finite(o.quality[2] for o in outcomes)
    rows = []
    for k, a in enumerate(suite.attacks):
        rows.append(
            AttackRow(
                attack=a,
                psnr_db=psnr,
                ssim=ssim,
                snr_db=snr,
                bit_accuracy=math.fsum(o.accuracy[k] for o in outcomes) / n,
                tpr=sum(o.detected[k] for o in outcomes) / n,
                fpr=sum(o.control_detected[k] for o in outcomes) / n,
                n_positive=n,
                n_negative=n,
            )
        )
    return rows


def run_suite(suite: SuiteSpec, engine, jobs: int = 1, config_digest: str | None = None) -> BenchmarkReport:
    """Run every (item, trial) task and aggregate one row per attack.

    Tasks may run on ``jobs`` threads; results are gathered in task order so the
    report does not depend on scheduling. The first failing task in that order
    aborts the run with a ``BenchmarkError``.
    """
    if jobs < 1:
        raise BadSpec("jobs must be >= 1")
    nbits = suite.payload_bits or engine.payload_bits(suite.modality)
    tasks = _plan(suite, nbits)
    items = {}

    def work(task: _Task) -> _Outcome:
        if task.item not in items:
            items[task.item] = generate_item(suite.dataset, task.item)
        return _run_task(suite, engine, nbits, task, items[task.item])

    if jobs == 1:
        outcomes = [work(t) for t in tasks]
    else:
        pool = ThreadPoolExecutor(max_workers=jobs)
        try:
            outcomes = list(pool.map(work, tasks))
        finally:
            pool.shutdown(wait=True, cancel_futures=True)

    meta = {
        "suite": suite.name,
        "seed": suite.seed,
        "config_digest": config_digest or engine.config.digest(),
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
    }
    return BenchmarkReport(meta, _aggregate(suite, outcomes))
