"""Run configured strategies over a dataset and collect per-instance records."""

from __future__ import annotations

import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from ..backend import Backend, CachedBackend, HttpBackend, MockBackend, MockScript, ResponseCache
from ..core import CandidateAnswer, DetectionResult, QuestionInstance
from ..errors import AdjustUnavailable, TargetUndetermined
from ..metrics import MetricReport, ScoredItem, evaluate
from ..strategies import (
    COUNTERFACTUAL_STRATEGY,
    consistency_majority,
    counterfactual_adjust,
    generate_target,
    get_strategy,
    top_k_self_target,
    top_k_verbalized,
)
from .config import ExperimentConfig
from .dataset import Dataset, load_dataset

logger = logging.getLogger(__name__)


@dataclass
class InstanceRecord:
    instance: QuestionInstance
    target: Optional[CandidateAnswer] = None
    skipped: Optional[str] = None
    results: dict[str, DetectionResult] = field(default_factory=dict)
    strategy_skips: dict[str, str] = field(default_factory=dict)

    @property
    def correct(self) -> Optional[bool]:
        return None if self.target is None else self.instance.is_correct(self.target)

    def to_json(self, trace: bool = False) -> dict:
        out = {
            "id": self.instance.id,
            "task": self.instance.task.value,
            "gold_label": self.instance.gold_label,
            "target": self.target.surface if self.target is not None else None,
            "target_index": self.instance.index_of(self.target) if self.target is not None else None,
            "correct": self.correct,
            "skipped": self.skipped,
            "strategy_skips": dict(sorted(self.strategy_skips.items())),
            "results": {},
        }
        for name, r in self.results.items():
            entry = {"score": r.score, "api_calls": r.api_calls, "top_answer": r.top_answer,
                     "flags": list(r.flags), "parse_failed": r.parse_failed, "details": r.details}
            if trace:
                entry["trace"] = [{"prompt": t.prompt, "response": t.response.text,
                                   "fingerprint": t.response.request_fingerprint} for t in r.trace]
            out["results"][name] = entry
        return out


@dataclass
class RunResult:
    config: ExperimentConfig
    records: list[dict]
    reports: list[MetricReport]
    counters: dict


def build_backend(config: ExperimentConfig) -> Backend:
    bspec = config.backend
    if bspec.kind == "mock":
        inner: Backend = MockBackend(MockScript.load(bspec.script), model=bspec.model)
    else:
        inner = HttpBackend(bspec.base_url, bspec.model, bspec.api_key_env, timeout=bspec.timeout,
                            max_attempts=bspec.max_attempts, requests_per_minute=bspec.requests_per_minute,
                            use_n=bspec.use_n)
    if config.cache_path is not None:
        return CachedBackend(inner, ResponseCache(config.cache_path))
    return inner


def select_subset(instances: list[QuestionInstance], limit: Optional[int], seed: int) -> list[QuestionInstance]:
    """Seeded sample of ``limit`` instances, kept in file order."""
    if limit is None or limit >= len(instances):
        return list(instances)
    picked = sorted(random.Random(seed).sample(range(len(instances)), limit))
    return [instances[i] for i in picked]


def _target(instance, config: ExperimentConfig, backend) -> CandidateAnswer:
    hp = config.hyperparameters
    if config.target_mode == "sc":
        return consistency_majority(instance, backend, hp, cot=False)
    if config.target_mode == "cc":
        return consistency_majority(instance, backend, hp, cot=True)
    return generate_target(instance, backend, hp)


def _counterfactual(instance, target, dataset: Dataset, cfg, backend) -> DetectionResult:
    pair = dataset.partner(instance.id)
    if pair is None:
        raise AdjustUnavailable("instance has no counterfactual partner")
    result = top_k_verbalized(instance, target, cfg, backend)
    result_cf = top_k_self_target(pair.counterfactual, cfg, backend)
    adjusted = counterfactual_adjust(pair, result, result_cf)
    return adjusted


def process_instance(instance: QuestionInstance, config: ExperimentConfig, dataset: Dataset,
                     backend: Backend) -> InstanceRecord:
    record = InstanceRecord(instance)
    if instance.gold_label is None:
        record.skipped = "unlabelled"
        return record
    try:
        record.target = _target(instance, config, backend)
    except TargetUndetermined as exc:
        logger.warning("%s", exc)
        record.skipped = "target_undetermined"
        return record
    for name in config.strategies:
        cfg = config.strategy_config(name)
        if name == COUNTERFACTUAL_STRATEGY:
            try:
                record.results[name] = _counterfactual(instance, record.target, dataset, cfg, backend)
            except AdjustUnavailable as exc:
                record.strategy_skips[name] = str(exc)
            continue
        record.results[name] = get_strategy(name)(instance, record.target, cfg, backend)
    return record


def reports_from_records(records: list[dict], strategies, bins: int = 10) -> list[MetricReport]:
    """Metric reports recomputed from per-instance JSON records."""
    out = []
    for name in strategies:
        items, failures, calls = [], 0, 0
        for rec in records:
            r = rec["results"].get(name)
            if rec["skipped"] or r is None:
                continue
            items.append(ScoredItem(r["score"], rec["correct"]))
            failures += bool(r["parse_failed"])
            calls += r["api_calls"]
        out.append(evaluate(name, items, parse_failures=failures, api_calls=calls, bins=bins))
    return out


def run_experiment(config: ExperimentConfig, backend: Optional[Backend] = None,
                   write: bool = True) -> RunResult:
    dataset = load_dataset(config.dataset, lenient=config.lenient)
    subset = select_subset(dataset.instances, config.sample_limit, config.rng_seed)
    backend = backend or build_backend(config)
    live_before = backend.calls
    hits_before = getattr(backend, "cache_hits", 0)

    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        outcomes = list(pool.map(lambda inst: process_instance(inst, config, dataset, backend), subset))

    records = [o.to_json(trace=config.trace) for o in outcomes]
    reports = reports_from_records(records, config.strategies, config.ece_bins)
    skipped: dict[str, list[str]] = {}
    for o in outcomes:
        if o.skipped:
            skipped.setdefault(o.skipped, []).append(o.instance.id)
    counters = {
        "loaded": len(dataset.instances),
        "malformed_lines": [e.line for e in dataset.errors],
        "selected": len(subset),
        "scored": sum(1 for o in outcomes if not o.skipped),
        "skipped": {k: v for k, v in sorted(skipped.items())},
        "logical_calls": sum(r.api_calls for o in outcomes for r in o.results.values()),
        "live_calls": backend.calls - live_before,
        "cache_hits": getattr(backend, "cache_hits", 0) - hits_before,
    }
    result = RunResult(config, records, reports, counters)
    if write:
        from .report import emit_report
        emit_report(result, config.output_dir)
    return result
