"""End-to-end experiment harness.

Generates a scenario, builds the knowledge base by running the backbone
on every source task, then races the configured arms (plain search,
search with transfer, search with adapted transfer) over a common set of
per-run random streams, so arm differences are never sampling
differences.  Results land in one output directory:

* ``scenario.json``: the generated problem family, self-describing.
* ``kb.json``: the knowledge base, archives and decay fits.
* ``traces.csv``: one row per evaluation per run per arm.
* ``convergence.csv``: per-evaluation summary of best-so-far per arm.
* ``transfer_rate.csv``: per-checkpoint transfer indicator means per arm.
* ``stats.json``: pairwise rank-sum comparisons of final bests with
  step-down multiplicity correction and win/tie/loss verdicts.
* ``metadata.json``: timing and environment notes; this is the one file
  allowed to differ between identical reruns.
"""

from __future__ import annotations

import csv
import itertools
import json
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .acquisition import EvoConfig, InfillCriterion
from .engine import BackboneConfig, RunTrace, run_search
from .exceptions import RunAbortError
from .kb_io import format_real, save_kb
from .rng import RngStream
from .scenarios import ScenarioSpec, gen_scenario
from .stats import holm_correction, wilcoxon_rank_sum
from .task import Database
from .transfer import (KnowledgeBase, TransferConfig, make_source_record,
                       run_search_with_transfer)

MODES = ("plain", "transfer", "transfer-adapt")
TRACE_HEADER = ["run_id", "arm", "fe", "best_y", "y", "transferred",
                "source_id", "delta_in", "delta_ex_max"]
CONVERGENCE_HEADER = ["arm", "fe", "best_mean", "best_median", "best_std"]
TRANSFER_RATE_HEADER = ["arm", "fe", "rate_mean", "rate_std"]
STATS_ALPHA = 0.05
_MIN_RUNS_FOR_STATS = 3


def bo_lcb_backbone(n_init: int = 50, budget: int = 500) -> BackboneConfig:
    """Probabilistic-surrogate backbone: GPR with a confidence-bound
    criterion and the crossover/mutation operator set."""
    return BackboneConfig(name="bo-lcb", surrogate="gpr",
                          criterion=InfillCriterion("lcb", weight=2.0),
                          evo=EvoConfig(operator_set="sbx"),
                          n_init=n_init, budget=budget)


def rbf_pov_backbone(n_init: int = 50, budget: int = 500) -> BackboneConfig:
    """Interpolant backbone: cubic RBF with the predicted-value criterion
    and the differential-evolution operator set."""
    return BackboneConfig(name="rbf-pov", surrogate="rbf",
                          criterion=InfillCriterion("pov"),
                          evo=EvoConfig(operator_set="de"),
                          n_init=n_init, budget=budget)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a reproducible experiment needs.

    The same master seed drives every arm: run ``r`` of each arm consumes
    stream child(0, r), and the knowledge-base build consumes children of
    child(1).  ``kb_backbone`` defaults to the bo-lcb configuration with
    the first target backbone's initialization size."""

    scenario: ScenarioSpec = ScenarioSpec()
    backbones: tuple = (bo_lcb_backbone(),)
    transfer: TransferConfig = TransferConfig()
    modes: tuple = ("plain", "transfer")
    n_runs: int = 30
    kb_budget: int = 500
    kb_backbone: Optional[BackboneConfig] = None
    seed: int = 0
    out_dir: str = "results"

    def __post_init__(self):
        if self.n_runs < 1:
            raise ValueError("n_runs must be at least 1")
        if not self.backbones:
            raise ValueError("at least one backbone is required")
        names = [bb.name for bb in self.backbones]
        if len(set(names)) != len(names):
            raise ValueError("backbone names must be unique")
        if not self.modes:
            raise ValueError("at least one mode is required")
        for mode in self.modes:
            if mode not in MODES:
                raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        if len(set(self.modes)) != len(self.modes):
            raise ValueError("modes must be unique")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def arms(self):
        """Arm labels and their (backbone index, mode), in output order."""
        out = []
        for bi, backbone in enumerate(self.backbones):
            for mode in self.modes:
                out.append((f"{backbone.name}:{mode}", bi, mode))
        return out


@dataclass
class ExperimentResult:
    """Where the files went plus in-memory summaries for callers."""

    out_dir: Path
    arm_labels: list[str]
    traces: dict = field(default_factory=dict)     # (label, run) -> RunTrace
    failures: list = field(default_factory=list)   # (label, run, message)
    final_best: dict = field(default_factory=dict)  # label -> np.ndarray

    def surviving(self, label) -> list[RunTrace]:
        failed = {(lab, run) for lab, run, _ in self.failures}
        return [trace for (lab, run), trace in sorted(self.traces.items())
                if lab == label and (lab, run) not in failed]


def checkpoint_fes(backbone: BackboneConfig, interval: int) -> list[int]:
    """Evaluation indices at which competitions are held.

    A competition happens when the archive size is a multiple of the
    interval, after initialization and before the budget runs out; the
    decided point becomes the next evaluation."""
    fes = []
    size = interval
    while size < backbone.budget:
        if size >= backbone.n_init:
            fes.append(size + 1)
        size += interval
    return fes


def build_kb(sources, backbone: BackboneConfig, rng: RngStream,
             kb_budget: Optional[int] = None) -> KnowledgeBase:
    """Run the backbone over every source task and archive the results.

    Source ``i`` consumes stream child(i) for both its run and its record
    packaging.  Any run abort propagates; no partial knowledge base is
    returned."""
    if not sources:
        raise ValueError("at least one source task is required")
    cfg = backbone if kb_budget is None else replace(backbone,
                                                     budget=kb_budget)
    records = []
    for i, task in enumerate(sources):
        srng = rng.child(i)
        trace = run_search(task.replica(), cfg, srng)
        db = Database(task.dim)
        for rec in trace.records:
            db.append(rec.point, rec.value)
        records.append(make_source_record(
            i, db, srng, name=task.name,
            lower_bounds=task.lower_bounds, upper_bounds=task.upper_bounds))
    return KnowledgeBase(dim=sources[0].dim, records=records)


def _kb_backbone_for(cfg: ExperimentConfig) -> BackboneConfig:
    if cfg.kb_backbone is not None:
        return replace(cfg.kb_backbone, budget=cfg.kb_budget)
    return bo_lcb_backbone(n_init=cfg.backbones[0].n_init,
                           budget=cfg.kb_budget)


# Worker processes rebuild the (scenario, KB) context lazily and cache it;
# on fork-based platforms the parent's warm cache is inherited for free.
_CONTEXT_CACHE: dict = {}


def _context(cfg: ExperimentConfig):
    ctx = _CONTEXT_CACHE.get(cfg)
    if ctx is None:
        scenario = gen_scenario(cfg.scenario)
        kb = None
        if any(mode != "plain" for mode in cfg.modes):
            kb = build_kb(scenario.sources, _kb_backbone_for(cfg),
                          RngStream(cfg.seed).child(1))
        ctx = (scenario, kb)
        _CONTEXT_CACHE[cfg] = ctx
    return ctx


def _mode_transfer_config(cfg: ExperimentConfig, mode: str) -> TransferConfig:
    if mode == "transfer":
        return replace(cfg.transfer, adaptation="off")
    regime = cfg.transfer.adaptation \
        if cfg.transfer.adaptation in ("offline", "online") else "offline"
    return replace(cfg.transfer, adaptation=regime)


def _execute_run(cfg: ExperimentConfig, backbone_index: int, mode: str,
                 run_index: int):
    scenario, kb = _context(cfg)
    backbone = cfg.backbones[backbone_index]
    rng = RngStream(cfg.seed).child(0, run_index)
    task = scenario.target.replica()
    try:
        if mode == "plain":
            trace = run_search(task, backbone, rng)
        else:
            trace = run_search_with_transfer(
                task, kb, backbone, rng,
                transfer=_mode_transfer_config(cfg, mode))
        return backbone_index, mode, run_index, trace, None
    except RunAbortError as exc:
        return backbone_index, mode, run_index, exc.trace, str(exc)


def _csv_writer(handle):
    return csv.writer(handle, lineterminator="\n")


def _opt(value) -> str:
    return "" if value is None else format_real(value)


def _write_traces(path, cfg: ExperimentConfig, result: ExperimentResult):
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = _csv_writer(handle)
        writer.writerow(TRACE_HEADER)
        for label, _, _ in cfg.arms():
            for run in range(cfg.n_runs):
                trace = result.traces.get((label, run))
                if trace is None:
                    continue
                for rec in trace.records:
                    writer.writerow([
                        run, label, rec.fe, format_real(rec.best_value),
                        format_real(rec.value),
                        1 if rec.transferred else 0,
                        "" if rec.source_id is None else rec.source_id,
                        _opt(rec.internal_improvement),
                        _opt(rec.max_external_improvement),
                    ])


def _write_convergence(path, cfg: ExperimentConfig, result: ExperimentResult):
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = _csv_writer(handle)
        writer.writerow(CONVERGENCE_HEADER)
        for label, bi, _ in cfg.arms():
            traces = result.surviving(label)
            if not traces:
                continue
            budget = cfg.backbones[bi].budget
            bests = np.array([[t.records[fe - 1].best_value
                               for fe in range(1, budget + 1)]
                              for t in traces])
            for fe in range(1, budget + 1):
                col = bests[:, fe - 1]
                std = float(np.std(col, ddof=1)) if len(col) > 1 else 0.0
                writer.writerow([label, fe, format_real(np.mean(col)),
                                 format_real(np.median(col)),
                                 format_real(std)])


def _write_transfer_rates(path, cfg: ExperimentConfig,
                          result: ExperimentResult):
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = _csv_writer(handle)
        writer.writerow(TRANSFER_RATE_HEADER)
        for label, bi, mode in cfg.arms():
            if mode == "plain":
                continue
            traces = result.surviving(label)
            if not traces:
                continue
            for fe in checkpoint_fes(cfg.backbones[bi],
                                     cfg.transfer.interval):
                flags = np.array([1.0 if t.records[fe - 1].transferred
                                  else 0.0 for t in traces])
                std = float(np.std(flags, ddof=1)) if len(flags) > 1 else 0.0
                writer.writerow([label, fe, format_real(np.mean(flags)),
                                 format_real(std)])


def _stats_document(cfg: ExperimentConfig, result: ExperimentResult) -> dict:
    labels = [label for label, _, _ in cfg.arms()]
    summaries = {}
    for label in labels:
        finals = result.final_best.get(label, np.array([]))
        summaries[label] = {
            "n": int(len(finals)),
            "median": float(np.median(finals)) if len(finals) else None,
            "mean": float(np.mean(finals)) if len(finals) else None,
        }
    usable, skipped = [], []
    for a, b in itertools.combinations(labels, 2):
        if (summaries[a]["n"] >= _MIN_RUNS_FOR_STATS
                and summaries[b]["n"] >= _MIN_RUNS_FOR_STATS):
            usable.append((a, b))
        else:
            skipped.append({"arm_a": a, "arm_b": b,
                            "reason": f"fewer than {_MIN_RUNS_FOR_STATS} "
                                      "surviving runs"})
    raw = [wilcoxon_rank_sum(result.final_best[a], result.final_best[b])
           for a, b in usable]
    adjusted = holm_correction(raw) if raw else []
    comparisons = []
    for (a, b), p_raw, p_holm in zip(usable, raw, adjusted):
        med_a, med_b = summaries[a]["median"], summaries[b]["median"]
        if p_holm < STATS_ALPHA and med_a != med_b:
            verdict = "win" if med_a < med_b else "loss"
        else:
            verdict = "tie"
        comparisons.append({
            "arm_a": a, "arm_b": b,
            "n_a": summaries[a]["n"], "n_b": summaries[b]["n"],
            "median_a": med_a, "median_b": med_b,
            "p_raw": float(p_raw), "p_holm": float(p_holm),
            "verdict": verdict,
        })
    return {
        "alpha": STATS_ALPHA,
        "final_best": summaries,
        "comparisons": comparisons,
        "skipped": skipped,
        "excluded_runs": [{"arm": lab, "run": run, "error": msg}
                          for lab, run, msg in result.failures],
    }


def run_experiment(cfg: ExperimentConfig, workers: int = 1
                   ) -> ExperimentResult:
    """Run every arm over every seed and write the result files.

    Rerunning with the same config reproduces every output byte-for-byte
    except ``metadata.json``, which holds wall-clock information."""
    started = time.perf_counter()
    started_at = datetime.now(timezone.utc).isoformat()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    scenario, kb = _context(cfg)
    jobs = [(bi, mode, run) for _, bi, mode in cfg.arms()
            for run in range(cfg.n_runs)]
    if workers <= 1:
        outcomes = [_execute_run(cfg, *job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_execute_run,
                                     itertools.repeat(cfg),
                                     *zip(*jobs)))

    result = ExperimentResult(out_dir=out,
                              arm_labels=[lab for lab, _, _ in cfg.arms()])
    label_of = {(bi, mode): lab for lab, bi, mode in cfg.arms()}
    for bi, mode, run, trace, error in outcomes:
        label = label_of[(bi, mode)]
        result.traces[(label, run)] = trace
        if error is not None:
            result.failures.append((label, run, error))
            warnings.warn(f"run {run} of arm {label} failed and is "
                          f"excluded from statistics: {error}",
                          RuntimeWarning)
    for label in result.arm_labels:
        traces = result.surviving(label)
        result.final_best[label] = np.array(
            [t.records[-1].best_value for t in traces])

    with open(out / "scenario.json", "w", encoding="utf-8") as handle:
        json.dump(scenario.metadata(), handle, indent=2)
        handle.write("\n")
    if kb is not None:
        save_kb(kb, out / "kb.json")
    _write_traces(out / "traces.csv", cfg, result)
    _write_convergence(out / "convergence.csv", cfg, result)
    if any(mode != "plain" for _, _, mode in cfg.arms()):
        _write_transfer_rates(out / "transfer_rate.csv", cfg, result)
    with open(out / "stats.json", "w", encoding="utf-8") as handle:
        json.dump(_stats_document(cfg, result), handle, indent=2)
        handle.write("\n")
    metadata = {
        "started_utc": started_at,
        "wall_time_s": time.perf_counter() - started,
        "package_version": __version__,
        "workers": workers,
        "n_runs": cfg.n_runs,
        "failed_runs": [{"arm": lab, "run": run, "error": msg}
                        for lab, run, msg in result.failures],
    }
    with open(out / "metadata.json", "w", encoding="utf-8") as handle:
        json.dump(metadata, handle, indent=2)
        handle.write("\n")
    return result
