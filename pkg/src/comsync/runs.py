"""Reading and writing synchronization run directories.

A run directory is self-contained: the manifest pins the config and seeds,
and each trial's ``targets.jsonl`` carries everything needed to re-rank and
re-score without touching the generation provider again (threshold sweeps
are generation-free by design).
"""

from __future__ import annotations

import datetime
import json
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import RunConfig
from .evaluate import aggregate_trials
from .pipeline import score_records
from .rerank import RerankConfig, RerankTarget, rerank

MANIFEST_NAME = "manifest.json"
TARGETS_NAME = "targets.jsonl"
VOLATILE_MANIFEST_KEYS = ("created_at",)


class MissingCache(Exception):
    pass


def trial_dir_name(trial: int) -> str:
    return f"trial_{trial:03d}"


def _dump_record(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def write_trial(run_dir: Path, trial: int, records: Sequence[dict]) -> Path:
    trial_dir = run_dir / trial_dir_name(trial)
    trial_dir.mkdir(parents=True, exist_ok=True)
    path = trial_dir / TARGETS_NAME
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(_dump_record(record))
            fh.write("\n")
    return path


def write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")


def write_manifest(
    run_dir: Path,
    config: RunConfig,
    trial_seeds: Sequence[int],
    ledger_totals: dict,
    trial_summaries: Sequence[dict],
    index_header: Optional[dict] = None,
    target_ids: Sequence[str] = (),
) -> None:
    manifest = {
        "tool": "comsync",
        "version": __version__,
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "master_seed": config.seed,
        "trial_seeds": list(trial_seeds),
        "targets": list(target_ids),
        "ledger": dict(ledger_totals),
        "trials": list(trial_summaries),
        "index": index_header,
    }
    write_json(run_dir / MANIFEST_NAME, manifest)


def load_manifest(run_dir: Path) -> dict:
    path = run_dir / MANIFEST_NAME
    if not path.exists():
        raise MissingCache(f"no manifest at {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def load_trials(run_dir: Path) -> list[list[dict]]:
    """All cached trial records, in trial order."""
    trials = []
    for trial_dir in sorted(Path(run_dir).glob("trial_*")):
        path = trial_dir / TARGETS_NAME
        if not path.exists():
            continue
        records = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
        trials.append(records)
    if not trials:
        raise MissingCache(f"no cached trial outputs under {run_dir}")
    return trials


def rerank_records(records: Sequence[dict], config: RerankConfig) -> list[dict]:
    """Re-rank cached candidates with different thresholds; the returned
    records carry the new order and diagnostics."""
    updated = []
    for record in records:
        if record.get("error"):
            updated.append(dict(record))
            continue
        target = RerankTarget(
            old_comment=record["old_comment"],
            old_function_name=_function_name(record, "old_code"),
            new_function_name=_function_name(record, "new_code"),
        )
        candidates = [c["text"] for c in record["candidates"]]
        result = rerank(target, candidates, config)
        fresh = dict(record)
        fresh["final_order"] = list(result.order)
        fresh["ranked_candidates"] = list(result.ranked)
        fresh["diagnostics"] = [d.to_dict() for d in result.diagnostics]
        updated.append(fresh)
    return updated


def _function_name(record: dict, key: str):
    from .changes import extract_function_name

    return extract_function_name(record[key], record.get("language", "java"))


def grid_values(start: float, stop: float, step: float) -> list[float]:
    """Inclusive arithmetic grid, rounded so 0.2 + k*0.05 stays exact."""
    values = []
    k = 0
    while True:
        value = round(start + k * step, 10)
        if value > stop + 1e-9:
            break
        values.append(value)
        k += 1
    return values


def sweep_grid(
    trials: Sequence[Sequence[dict]],
    sigmas: Sequence[float],
    epsilons: Sequence[float],
    base_config: RerankConfig,
) -> list[dict]:
    """Metric grid over the threshold lattice, re-ranking cached candidates.

    Each cell aggregates the per-trial scores exactly the way a live run
    does, so the cell at the run's own thresholds reproduces its metrics.
    """
    cells = []
    for sigma in sigmas:
        for epsilon in epsilons:
            cell_config = RerankConfig(
                sigma=sigma,
                epsilon=epsilon,
                enabled_rules=base_config.enabled_rules,
                count_distinct_novel=base_config.count_distinct_novel,
                case_sensitive_distance=base_config.case_sensitive_distance,
            )
            reports = []
            for records in trials:
                reranked = rerank_records(records, cell_config)
                reports.append(score_records(reranked))
            aggregate = aggregate_trials(reports)
            cells.append(
                {
                    "sigma": sigma,
                    "epsilon": epsilon,
                    "mean": aggregate.mean,
                    "std": aggregate.std,
                }
            )
    return cells


def write_sweep_csv(cells: Sequence[dict], path: Path) -> None:
    import csv

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "sigma",
                "epsilon",
                "accuracy_mean",
                "accuracy_std",
                "recall_at_5_mean",
                "recall_at_5_std",
                "ess_ratio_mean",
                "ess_ratio_std",
            ]
        )
        for cell in cells:
            writer.writerow(
                [
                    repr(cell["sigma"]),
                    repr(cell["epsilon"]),
                    repr(cell["mean"]["accuracy"]),
                    repr(cell["std"]["accuracy"]),
                    repr(cell["mean"]["recall_at_5"]),
                    repr(cell["std"]["recall_at_5"]),
                    repr(cell["mean"]["ess_ratio"]),
                    repr(cell["std"]["ess_ratio"]),
                ]
            )
