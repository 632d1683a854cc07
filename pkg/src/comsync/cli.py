"""Command-line interface: ingest, index, retrieve, sync, rerank, sweep,
eval, analyze, and serve."""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from .config import RunConfig, derive_seed
from .evaluate import aggregate_trials, analyze_corpus
from .gateway import TokenLedger
from .pipeline import SyncEngine, make_embed_provider, score_records
from .rerank import RerankConfig
from .retrieval import DemonstrationIndex, build_index, retrieve
from .runs import (
    grid_values,
    load_manifest,
    load_trials,
    rerank_records,
    sweep_grid,
    write_json,
    write_manifest,
    write_sweep_csv,
    write_trial,
)
from .samples import dump_jsonl, load_jsonl, validate_jsonl


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Run config JSON used by commands that need one.")
@click.option("--seed", type=int, default=None, help="Override the config's master seed.")
@click.option("--parallelism", type=int, default=None, help="Override the config's worker count.")
@click.pass_context
def main(ctx, config_path, seed, parallelism):
    """Code-comment synchronization toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path
    ctx.obj["seed"] = seed
    ctx.obj["parallelism"] = parallelism


def _load_config(ctx, config_path=None) -> RunConfig:
    path = config_path or ctx.obj.get("config_path")
    config = RunConfig.from_file(path) if path else RunConfig()
    if ctx.obj.get("seed") is not None:
        config.seed = ctx.obj["seed"]
    if ctx.obj.get("parallelism") is not None:
        config.parallelism = ctx.obj["parallelism"]
    return config


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(), required=True, help="Canonical corpus output path.")
@click.option("--report", "report_path", type=click.Path(), default=None, help="Validation report path (JSON).")
def ingest(path, out, report_path):
    """Validate a JSONL corpus and write its canonical form.

    Rejected records are listed with line numbers in the validation report;
    the exit status is non-zero only when no record survives.
    """
    samples, report = validate_jsonl(path)
    dump_jsonl(samples, out)
    payload = report.to_dict()
    payload["canonical_path"] = str(out)
    if report_path:
        write_json(Path(report_path), payload)
    for line, message in report.errors:
        click.echo(f"{path}:{line}: {message}", err=True)
    click.echo(f"ingested {report.n_valid} record(s), {len(report.errors)} rejected -> {out}")
    if report.n_valid == 0:
        sys.exit(1)


@main.command("index")
@click.option("--corpus", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_context
def index_cmd(ctx, corpus, out, config_path):
    """Build the demonstration index for a training corpus."""
    config = _load_config(ctx, config_path)
    samples = load_jsonl(corpus)
    provider = make_embed_provider(config)
    built = build_index(samples, provider)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    built.save(out)
    click.echo(f"indexed {len(built)} sample(s) -> {out}")


@main.command("retrieve")
@click.option("--index", "index_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--corpus", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Targets to retrieve demonstrations for.")
@click.option("--strategy", type=click.Choice(["random", "expert", "semantic", "ehr"]), default="ehr")
@click.option("--p", type=int, default=4)
@click.option("--out", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_context
def retrieve_cmd(ctx, index_path, corpus, strategy, p, out, config_path):
    """Retrieve demonstrations for each target in a corpus."""
    config = _load_config(ctx, config_path)
    demonstration_index = DemonstrationIndex.load(index_path)
    provider = make_embed_provider(config) if config.embedding.kind == "remote" else None
    targets = load_jsonl(corpus)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        for target in targets:
            seed = derive_seed(config.seed, "target", target.id)
            result = retrieve(demonstration_index, target, strategy=strategy, p=p, seed=seed, provider=provider)
            record = {
                "target_id": target.id,
                "strategy": strategy,
                "demos": [
                    {"id": d.sample_id, "pool": d.pool, "score": d.score, "rank_in_pool": d.rank_in_pool}
                    for d in result.demos
                ],
            }
            fh.write(json.dumps(record, sort_keys=True, separators=(",", ":"), ensure_ascii=False))
            fh.write("\n")
    click.echo(f"retrieved {strategy} demos for {len(targets)} target(s) -> {out}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", type=click.Path(), default=None, help="Override the config's output directory.")
@click.pass_context
def sync(ctx, config_path, out):
    """Run the full pipeline: retrieve, render, generate, re-rank.

    Writes per-target records, per-trial metrics when references are
    available, and a run manifest. Exit status is non-zero only when every
    target fails.
    """
    config = _load_config(ctx, config_path)
    if out:
        config.output_dir = out
    run_dir = Path(config.output_dir)
    run_dir.mkdir(parents=True, exist_ok=True)

    train = load_jsonl(config.train_path)
    targets = load_jsonl(config.test_path)

    index_path = config.resolved_index_path()
    if index_path.exists():
        demonstration_index = DemonstrationIndex.load(index_path)
    else:
        demonstration_index = build_index(train, make_embed_provider(config))
        index_path.parent.mkdir(parents=True, exist_ok=True)
        demonstration_index.save(index_path)

    engine = SyncEngine.from_config(config, demonstration_index, train)
    ledger = TokenLedger()
    trial_seeds = [derive_seed(config.seed, "trial", i) for i in range(config.trials)]

    trial_summaries = []
    trial_reports = []
    any_success = False
    for trial, trial_seed in enumerate(trial_seeds):
        records = engine.run_trial(targets, trial_seed, parallelism=config.parallelism, ledger=ledger)
        write_trial(run_dir, trial, records)
        errors = sum(1 for r in records if r.get("error"))
        any_success = any_success or errors < len(records)
        summary = {"trial": trial, "seed": trial_seed, "targets": len(records), "errors": errors}
        scorable = errors == 0 and all(r.get("reference") is not None for r in records)
        if scorable:
            report = score_records(records)
            trial_reports.append(report)
            write_json(run_dir / f"trial_{trial:03d}" / "metrics.json", report.to_dict())
            summary["metrics"] = report.metrics()
        trial_summaries.append(summary)

    totals = ledger.snapshot()
    totals["cost"] = ledger.cost(config.prices.input_per_million, config.prices.output_per_million)
    if trial_reports:
        write_json(run_dir / "eval_report.json", aggregate_trials(trial_reports).to_dict())
    write_manifest(
        run_dir,
        config,
        trial_seeds,
        totals,
        trial_summaries,
        demonstration_index.header(),
        target_ids=[t.id for t in targets],
    )
    click.echo(f"synchronized {len(targets)} target(s) x {config.trials} trial(s) -> {run_dir}")
    if not any_success:
        sys.exit(1)


@main.command("rerank")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="JSONL of cached target records (sync output format).")
@click.option("--out", type=click.Path(), required=True)
@click.option("--sigma", type=float, default=0.35)
@click.option("--epsilon", type=float, default=0.25)
@click.option("--rules", default="1,2,3", help="Comma-separated subset of 1,2,3.")
@click.option("--count-distinct", is_flag=True, default=False,
              help="Count distinct novel sub-tokens instead of occurrences.")
def rerank_cmd(input_path, out, sigma, epsilon, rules, count_distinct):
    """Re-rank cached candidates; emits records plus rule diagnostics."""
    enabled = frozenset(int(r) for r in rules.split(",") if r.strip())
    config = RerankConfig(sigma=sigma, epsilon=epsilon, enabled_rules=enabled, count_distinct_novel=count_distinct)
    records = [json.loads(line) for line in Path(input_path).read_text(encoding="utf-8").splitlines() if line.strip()]
    updated = rerank_records(records, config)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        for record in updated:
            fh.write(json.dumps(record, sort_keys=True, separators=(",", ":"), ensure_ascii=False))
            fh.write("\n")
    click.echo(f"re-ranked {len(updated)} record(s) -> {out}")


@main.command()
@click.option("--run-dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--sigma-range", default="0.2:0.4:0.05", help="start:stop:step")
@click.option("--epsilon-range", default="0.2:0.6:0.05", help="start:stop:step")
@click.option("--out", type=click.Path(), default=None, help="Grid CSV path (default <run-dir>/sweep.csv).")
def sweep(run_dir, sigma_range, epsilon_range, out):
    """Metric grid over the threshold lattice, from cached candidates only."""
    run_path = Path(run_dir)
    manifest = load_manifest(run_path)
    trials = load_trials(run_path)
    base = RunConfig.from_dict(manifest["config"]).rerank_config()
    sigmas = grid_values(*_parse_range(sigma_range))
    epsilons = grid_values(*_parse_range(epsilon_range))
    cells = sweep_grid(trials, sigmas, epsilons, base)
    out_path = Path(out) if out else run_path / "sweep.csv"
    write_sweep_csv(cells, out_path)
    click.echo(f"swept {len(sigmas)}x{len(epsilons)} = {len(cells)} cell(s) -> {out_path}")


def _parse_range(spec: str) -> tuple[float, float, float]:
    parts = spec.split(":")
    if len(parts) == 1:
        value = float(parts[0])
        return value, value, 1.0
    if len(parts) != 3:
        raise click.BadParameter(f"expected start:stop:step, got {spec!r}")
    return float(parts[0]), float(parts[1]), float(parts[2])


@main.command("eval")
@click.option("--run-dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--pre-rerank", is_flag=True, default=False, help="Score the provider order instead.")
@click.option("--out", type=click.Path(), default=None, help="Report JSON (default <run-dir>/report.json).")
@click.option("--csv", "csv_path", type=click.Path(), default=None, help="Report CSV (default <run-dir>/report.csv).")
def eval_cmd(run_dir, pre_rerank, out, csv_path):
    """Score a cached run: Accuracy, Recall@5, ESS Ratio per trial and aggregate."""
    run_path = Path(run_dir)
    trials = load_trials(run_path)
    reports = [score_records(records, pre_rerank=pre_rerank) for records in trials]
    aggregate = aggregate_trials(reports)
    out_path = Path(out) if out else run_path / "report.json"
    write_json(out_path, aggregate.to_dict())
    csv_out = Path(csv_path) if csv_path else run_path / "report.csv"
    with open(csv_out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "accuracy", "recall_at_5", "ess_ratio"])
        for i, report in enumerate(reports):
            writer.writerow([i, repr(report.accuracy), repr(report.recall_at_5), repr(report.ess_ratio)])
        writer.writerow(["mean"] + [repr(aggregate.mean[m]) for m in ("accuracy", "recall_at_5", "ess_ratio")])
        writer.writerow(["std"] + [repr(aggregate.std[m]) for m in ("accuracy", "recall_at_5", "ess_ratio")])
    for name in ("accuracy", "recall_at_5", "ess_ratio"):
        click.echo(f"{name}: {aggregate.mean[name]:.4f} +/- {aggregate.std[name]:.4f}")


@main.command()
@click.option("--corpus", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(), default=None, help="Analysis JSON path.")
@click.option("--csv", "csv_path", type=click.Path(), default=None, help="Histogram CSV path.")
def analyze(corpus, out, csv_path):
    """Corpus analyses: function-name propagation and the two ratio histograms."""
    samples = load_jsonl(corpus)
    analysis = analyze_corpus(samples)
    if out:
        write_json(Path(out), analysis.to_dict())
    if csv_path:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["histogram", "low", "high", "count", "share"])
            for kind, bins in (
                ("new_subtoken_ratio", analysis.new_subtoken_histogram),
                ("edit_distance_ratio", analysis.edit_ratio_histogram),
            ):
                for b in bins:
                    high = "inf" if b.high == float("inf") else b.high
                    writer.writerow([kind, b.low, high, b.count, repr(b.share)])
    rate = "n/a" if analysis.propagation_rate is None else f"{analysis.propagation_rate:.4f}"
    click.echo(f"samples: {analysis.n_samples}")
    click.echo(f"function-name propagation rate: {rate} (subset of {analysis.propagation_subset})")
    click.echo(f"new-sub-token ratio share below 0.4: {analysis.new_subtoken_share_below_04:.4f}")
    click.echo(f"edit-distance ratio share below 0.6: {analysis.edit_ratio_share_below_06:.4f}")


@main.command()
@click.option("--index", "index_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--train", "train_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_context
def serve(ctx, index_path, train_path, host, port, config_path):
    """Run the HTTP service wrapping the pipeline."""
    import uvicorn

    from .service import build_state, create_app

    config = _load_config(ctx, config_path)
    state = build_state(config, index_path=index_path, train_path=train_path)
    uvicorn.run(create_app(state), host=host, port=port)


if __name__ == "__main__":
    main()
