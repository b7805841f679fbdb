"""Command-line entry points.

Subcommands:

* ``gen-scenario``: generate a problem family and write ``scenario.json``.
* ``build-kb``: run the backbone over the scenario's sources and write
  the knowledge base to ``kb.json``.
* ``run``: the full experiment (scenario, knowledge base, all arms,
  result files).
* ``theory-sweep``: tabulate the similarity threshold over a grid of
  decay rates and time advantages.
* ``kb inspect``: summarize a stored knowledge base without refitting.

Configuration files are YAML whose keys mirror the ExperimentConfig
fields; command-line flags override the file.  Note that bare ``off`` in
YAML parses as a boolean, so write ``adaptation: "off"`` (quoted) or let
the normalizer map ``false`` to off and ``true`` to offline.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from .acquisition import EvoConfig, InfillCriterion
from .engine import BackboneConfig
from .exceptions import KnowledgeBaseFormatError
from .experiment import (ExperimentConfig, bo_lcb_backbone, build_kb,
                         rbf_pov_backbone, run_experiment, _kb_backbone_for)
from .kb_io import save_kb
from .rng import RngStream
from .scenarios import ScenarioSpec, gen_scenario
from .theory import threshold_sweep, write_threshold_csv
from .transfer import TransferConfig

_PRESETS = {"bo-lcb": bo_lcb_backbone, "rbf-pov": rbf_pov_backbone}


def _normalize_adaptation(value):
    # YAML reads bare off/on as booleans; map them back to mode names
    if value is False:
        return "off"
    if value is True:
        return "offline"
    return value


def _backbone_from(doc) -> BackboneConfig:
    doc = dict(doc)
    preset = doc.pop("preset", None)
    if preset is not None:
        if preset not in _PRESETS:
            raise ValueError(f"unknown backbone preset {preset!r}; "
                             f"choose from {sorted(_PRESETS)}")
        base = _PRESETS[preset]()
        allowed = {"name", "n_init", "budget", "dedup_tol"}
        extra = set(doc) - allowed
        if extra:
            raise ValueError(f"preset backbones only accept {sorted(allowed)} "
                             f"overrides, got {sorted(extra)}")
        return replace(base, **doc)
    if "criterion" in doc:
        doc["criterion"] = InfillCriterion(**doc["criterion"])
    if "evo" in doc:
        doc["evo"] = EvoConfig(**doc["evo"])
    return BackboneConfig(**doc)


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from a parsed configuration document."""
    doc = dict(doc or {})
    kwargs = {}
    if "scenario" in doc:
        kwargs["scenario"] = ScenarioSpec(**doc.pop("scenario"))
    if "backbones" in doc:
        kwargs["backbones"] = tuple(_backbone_from(b)
                                    for b in doc.pop("backbones"))
    if "transfer" in doc:
        tdoc = dict(doc.pop("transfer"))
        if "adaptation" in tdoc:
            tdoc["adaptation"] = _normalize_adaptation(tdoc["adaptation"])
        kwargs["transfer"] = TransferConfig(**tdoc)
    if "kb_backbone" in doc:
        kb_doc = doc.pop("kb_backbone")
        kwargs["kb_backbone"] = None if kb_doc is None \
            else _backbone_from(kb_doc)
    if "modes" in doc:
        kwargs["modes"] = tuple(doc.pop("modes"))
    for key in ("n_runs", "kb_budget", "seed", "out_dir"):
        if key in doc:
            kwargs[key] = doc.pop(key)
    if doc:
        raise ValueError(f"unknown configuration keys: {sorted(doc)}")
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return config_from_dict(yaml.safe_load(handle))


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "out", None) is not None:
        cfg = replace(cfg, out_dir=args.out)
    if getattr(args, "delta", None) is not None:
        cfg = replace(cfg, transfer=replace(cfg.transfer,
                                            interval=args.delta))
    adaptation = getattr(args, "adaptation", None)
    if adaptation is not None:
        modes = list(cfg.modes)
        if adaptation == "off":
            modes = [m for m in modes if m != "transfer-adapt"]
            cfg = replace(cfg, transfer=replace(cfg.transfer,
                                                adaptation="off"),
                          modes=tuple(modes) or ("plain", "transfer"))
        else:
            if "transfer-adapt" not in modes:
                modes.append("transfer-adapt")
            cfg = replace(cfg, transfer=replace(cfg.transfer,
                                                adaptation=adaptation),
                          modes=tuple(modes))
    return cfg


def _config_for(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return _apply_overrides(cfg, args)


def _cmd_gen_scenario(args) -> int:
    cfg = _config_for(args)
    spec = cfg.scenario
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    scenario = gen_scenario(spec)
    out = Path(args.out or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "scenario.json"
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(scenario.metadata(), handle, indent=2)
        handle.write("\n")
    print(f"wrote {path}: {spec.category} family of {spec.k} sources "
          f"around a {spec.dim}-d {spec.base} target")
    return 0


def _cmd_build_kb(args) -> int:
    cfg = _config_for(args)
    scenario = gen_scenario(cfg.scenario)
    kb = build_kb(scenario.sources, _kb_backbone_for(cfg),
                  RngStream(cfg.seed).child(1))
    out = Path(args.out or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "kb.json"
    save_kb(kb, path)
    usable = sum(1 for rec in kb.records if not rec.decay.degenerate)
    print(f"wrote {path}: {kb.k} sources, {usable} with usable decay fits")
    return 0


def _cmd_run(args) -> int:
    cfg = _config_for(args)
    result = run_experiment(cfg, workers=args.workers)
    print(f"wrote results to {result.out_dir}")
    for label in result.arm_labels:
        finals = result.final_best[label]
        if len(finals):
            print(f"  {label}: median final best "
                  f"{float(np.median(finals)):.6g} over {len(finals)} runs")
        else:
            print(f"  {label}: no surviving runs")
    if result.failures:
        print(f"  {len(result.failures)} run(s) failed; see metadata.json",
              file=sys.stderr)
    return 0


def _parse_grid(text: str) -> np.ndarray:
    try:
        start, stop, count = text.split(":")
        return np.linspace(float(start), float(stop), int(count))
    except ValueError as exc:
        raise ValueError(f"grid must look like start:stop:count, got "
                         f"{text!r}") from exc


def _cmd_theory_sweep(args) -> int:
    rates = _parse_grid(args.rate_grid)
    advantages = _parse_grid(args.advantage_grid)
    rows = threshold_sweep(rates, advantages, tau=args.tau)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / "threshold_sweep.csv"
    write_threshold_csv(rows, path)
    missing = sum(1 for _, _, t in rows if t is None)
    print(f"wrote {path}: {len(rows)} cells, {missing} without a threshold")
    return 0


def _cmd_kb_inspect(args) -> int:
    with open(args.path, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    version = doc.get("schema_version")
    if version != 1:
        raise KnowledgeBaseFormatError(
            f"schema_version: expected 1, found {version!r}",
            field="schema_version")
    records = doc.get("records", [])
    print(f"knowledge base: dimension {doc.get('dimension')}, "
          f"{len(records)} record(s)")
    for rec in records:
        y = [float(v) for v in rec.get("y", [])]
        decay = rec.get("decay", {})
        line = (f"  source {rec.get('task_id')}: {len(y)} evaluations, "
                f"tau_max {rec.get('tau_max')}, "
                f"best {min(y):.6g}" if y else
                f"  source {rec.get('task_id')}: empty archive")
        if decay.get("degenerate"):
            line += ", decay degenerate"
        else:
            line += (f", decay floor {float(decay.get('gamma_o', 'nan')):.4g}"
                     f" rate {float(decay.get('lambda', 'nan')):.4g}")
        if "adaptation" in rec and rec["adaptation"] is not None:
            line += ", adaptation map stored"
        print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xferopt",
        description="Surrogate-assisted optimization with competitive "
                    "reuse of archived solutions.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, workers=False, adaptation=False, delta=False):
        p.add_argument("--config", help="YAML configuration file")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--out", help="output directory override")
        if workers:
            p.add_argument("--workers", type=int, default=1,
                           help="parallel worker processes (default 1)")
        if adaptation:
            p.add_argument("--adaptation",
                           choices=["off", "offline", "online"],
                           help="translation-map regime for the adapted arm")
        if delta:
            p.add_argument("--delta", type=int,
                           help="evaluations between competitions")

    p = sub.add_parser("gen-scenario",
                       help="generate a problem family and write scenario.json")
    add_common(p)
    p.set_defaults(handler=_cmd_gen_scenario)

    p = sub.add_parser("build-kb",
                       help="build the knowledge base and write kb.json")
    add_common(p)
    p.set_defaults(handler=_cmd_build_kb)

    p = sub.add_parser("run", help="run the full experiment")
    add_common(p, workers=True, adaptation=True, delta=True)
    p.set_defaults(handler=_cmd_run)

    p = sub.add_parser("theory-sweep",
                       help="tabulate similarity thresholds over a grid")
    p.add_argument("--out", help="output directory (default .)")
    p.add_argument("--rate-grid", default="0.02:0.3:15",
                   help="decay-rate grid as start:stop:count")
    p.add_argument("--advantage-grid", default="2:200:15",
                   help="time-advantage grid as start:stop:count")
    p.add_argument("--tau", type=float, default=1.0,
                   help="evaluations already spent by the target")
    p.set_defaults(handler=_cmd_theory_sweep)

    p = sub.add_parser("kb", help="knowledge-base utilities")
    kb_sub = p.add_subparsers(dest="kb_command", required=True)
    p_inspect = kb_sub.add_parser("inspect",
                                  help="summarize a stored knowledge base")
    p_inspect.add_argument("path", help="path to a kb.json file")
    p_inspect.set_defaults(handler=_cmd_kb_inspect)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, OSError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
