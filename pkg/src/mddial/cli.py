"""Command line interface: training, evaluation, curves/figures, chat service."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import yaml

from . import __version__
from .harness import (
    ExperimentConfig,
    aggregate_curves,
    build_domain,
    export_curves,
    import_curves,
    run_evaluation,
    run_training,
    save_ensemble,
)
from .scripted import handcrafted_ensemble
from .selection import VARIANTS
from .tracking import FeatureMap


@click.group()
@click.version_option(__version__)
def main():
    """Multi-dimensional dialogue manager: train, evaluate, chat."""


@main.command()
@click.option("--variant", type=click.Choice(VARIANTS), default=None)
@click.option("--scenario", type=click.Choice(["source", "target"]), default=None,
              help="Defaults to source for mdim_src, target otherwise.")
@click.option("--dialogues", "n_dialogues", type=int, default=None, help="[default: 30000]")
@click.option("--runs", "n_runs", type=int, default=None, help="[default: 10]")
@click.option("--seed", type=int, default=None, help="[default: 0]")
@click.option("--error-rate", type=float, default=None, help="[default: 0.25]")
@click.option("--problem-rate", type=float, default=None, help="[default: 0.05]")
@click.option("--learning-rate", type=float, default=None)
@click.option("--transfer-from", "transfer_source", type=click.Path(exists=True), default=None,
              help="mdim_src experiment directory (required for mdim_ada).")
@click.option("--config", "config_file", type=click.Path(exists=True), default=None,
              help="YAML file with ExperimentConfig fields; explicit CLI flags override it.")
@click.option("--log-episodes", is_flag=True, default=None, help="Write full turn-by-turn logs during training.")
@click.option("--out", "out_dir", type=click.Path(), default=None)
def train(config_file, **kwargs):
    """Train one variant for N dialogues x N runs against the simulator."""
    base = {}
    if config_file:
        base = yaml.safe_load(Path(config_file).read_text()) or {}
        base.pop("version", None)
        base.pop("fingerprint", None)
    base.update({k: v for k, v in kwargs.items() if v is not None})
    if not base.get("variant"):
        raise click.UsageError("--variant is required (directly or via --config)")
    if not base.get("out_dir"):
        raise click.UsageError("--out is required (directly or via --config)")
    config = ExperimentConfig.from_dict(base)
    total = config.n_runs * config.n_dialogues

    with click.progressbar(length=total, label=f"training {config.variant}") as bar:
        run_training(config, on_episode=lambda run, ep, res: bar.update(1))
    click.echo(f"experiment written to {config.out_dir}")


@main.command("eval")
@click.option("--policies", type=click.Path(exists=True), required=True,
              help="Ensemble dir, experiment dir (pool of runs), or pool dir.")
@click.option("--checkpoint", default=None, help="Use run checkpoints, e.g. ep005000.")
@click.option("--dialogues", type=int, default=3000, show_default=True)
@click.option("--error-rate", type=float, default=0.25, show_default=True)
@click.option("--problem-rate", type=float, default=0.05, show_default=True)
@click.option("--exploration", type=click.Choice(["off", "on"]), default="off", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--db", "db_file", type=click.Path(exists=True), default=None,
              help="Venue database CSV; defaults to <policies>/db.csv when present.")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Write report.json and episodes.jsonl here.")
def eval_cmd(policies, checkpoint, dialogues, error_rate, problem_rate, exploration, seed, db_file, out_dir):
    """Evaluate frozen policies over simulated dialogues (round-robin pool)."""
    if db_file is None:
        candidate = Path(policies) / "db.csv"
        db_file = candidate if candidate.exists() else None
    domain = build_domain(db_file=db_file)
    report = run_evaluation(
        domain, policies,
        n_dialogues=dialogues, error_rate=error_rate, problem_rate=problem_rate,
        exploration=exploration, seed=seed, checkpoint=checkpoint, out_dir=out_dir,
    )
    click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True))


@main.command()
@click.option("--in", "experiment_dirs", type=click.Path(exists=True), multiple=True, required=True,
              help="One or more experiment directories (repeatable).")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--reimport-check", is_flag=True, help="Verify the CSV round-trips losslessly.")
def curves(experiment_dirs, out_dir, reimport_check):
    """Aggregate learning curves (mean +/- stddev over runs) to CSV and PNG figures."""
    from .plots import plot_learning_curves

    summaries = [aggregate_curves(d) for d in experiment_dirs]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = export_curves(summaries, out / "curves.csv")
    png_success = plot_learning_curves(summaries, out / "curves_success.png", metric="success")
    png_reward = plot_learning_curves(summaries, out / "curves_reward.png", metric="reward")
    if reimport_check:
        import numpy as np

        reloaded = {s.label: s for s in import_curves(csv_path)}
        for s in summaries:
            r = reloaded[s.label]
            assert np.allclose(r.success_mean, s.success_mean) and np.allclose(r.reward_mean, s.reward_mean)
        click.echo("reimport check passed")
    click.echo(f"wrote {csv_path}, {png_success}, {png_reward}")


@main.command()
@click.option("--print-map", is_flag=True, default=True)
@click.option("--ontology", "ontology_path", type=click.Path(exists=True), default=None)
def features(print_map, ontology_path):
    """Print the published feature index map for the domain."""
    domain = build_domain(ontology_source=ontology_path)
    fmap = domain.feature_map
    if print_map:
        for i, name in fmap.index_map():
            click.echo(f"{i:3d}  {name}")
        click.echo(f"# length={len(fmap)} hash={fmap.feature_hash()}")


@main.command("demo-pool")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--size", type=int, default=10, show_default=True)
@click.option("--variant", type=click.Choice(["multi_dim", "one_dim"]), default="multi_dim", show_default=True)
def demo_pool(out_dir, size, variant):
    """Write a pool of hand-set-weight ensembles (no training needed) plus its database."""
    from .domain import export_database

    domain = build_domain()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    export_database(domain.db, out / "db.csv")
    scenario = "target"
    for i in range(size):
        ensemble = handcrafted_ensemble(variant, scenario, domain.feature_map)
        save_ensemble(ensemble, out / f"pool_{i:02d}", metadata={"variant": variant, "handcrafted": True})
    click.echo(f"wrote {size} {variant} ensembles to {out}")


@main.command("chat-serve")
@click.option("--policies", type=click.Path(exists=True), required=True)
@click.option("--checkpoint", default=None)
@click.option("--db", "db_file", type=click.Path(exists=True), default=None)
@click.option("--results", "results_dir", type=click.Path(), default="chat_results", show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8700, show_default=True)
def chat_serve(policies, checkpoint, db_file, results_dir, host, port):
    """Serve the chat HTTP API over a pool of frozen policies."""
    import uvicorn

    from .chat.service import ChatService, create_app, load_pool

    if db_file is None:
        candidate = Path(policies) / "db.csv"
        db_file = candidate if candidate.exists() else None
    domain = build_domain(db_file=db_file)
    pool = load_pool(policies, domain, checkpoint)
    service = ChatService(pool, domain, results_dir)
    click.echo(f"serving {len(pool)} policies on http://{host}:{port}")
    uvicorn.run(create_app(service), host=host, port=port, log_level="warning")


@main.command("chat-report")
@click.option("--results", "results_path", type=click.Path(exists=True), required=True,
              help="questionnaires.jsonl written by the chat service.")
@click.option("--out", "out_csv", type=click.Path(), default=None)
def chat_report(results_path, out_csv):
    """Aggregate questionnaire scores per variant (mean and stddev per question)."""
    import csv as _csv

    from .chat.service import aggregate_questionnaires

    summary = aggregate_questionnaires(results_path)
    click.echo(json.dumps(summary, indent=2, sort_keys=True))
    if out_csv:
        with open(out_csv, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["variant", "n_dialogues", "avg_length",
                             "q1_pct", "q2_pct", "q3", "q4", "q5", "q6"])
            for variant, row in summary.items():
                writer.writerow([
                    variant, row["n_dialogues"], round(row["average_length"]["mean"], 2),
                    *(round(row[q]["mean"], 2) for q in ("q1", "q2", "q3", "q4", "q5", "q6")),
                ])
        click.echo(f"wrote {out_csv}")


if __name__ == "__main__":
    sys.exit(main())
