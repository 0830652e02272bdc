"""Training and evaluation loops, transfer initialisation, metrics, persistence.

A training experiment produces one directory per run holding the final and
checkpoint policies, a sliding-window learning curve, and per-episode summary
rows; evaluation replays frozen policies (round-robin over a pool) and writes
a report plus full episode logs. Everything is a pure function of the config
and seeds: re-running a config reproduces every file byte for byte.
"""

from __future__ import annotations

import csv
import json
import time
from collections import deque
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .acts import DialogueAct, serialize_act
from .domain import (
    DatabaseIndex,
    Ontology,
    UserGoal,
    Venue,
    export_database,
    generate_database,
    import_database,
    load_ontology,
    sample_goal,
)
from .policy import (
    EpisodeTrace,
    LinearPolicy,
    TemperatureSchedule,
    load_policy,
    mc_update,
    new_policy,
    save_policy,
    temperature_at,
)
from .reward import turn_reward
from .selection import (
    MDIM_AGENTS,
    AgentEnsemble,
    SelectionThresholds,
    fresh_ensemble,
    record_traces,
    select_response,
    set_last_rewards,
)
from .simulator import (
    UserConfig,
    apply_error_model,
    init_user,
    maybe_processing_problem,
    user_respond,
)
from .tracking import FeatureMap, init_state, update_with_system_acts, update_with_user_input

ENSEMBLE_FILE = "ensemble.json"


@dataclass(frozen=True)
class Domain:
    """Everything a dialogue needs: ontology, venue database, feature layout."""

    ontology: Ontology
    db: list[Venue]
    index: DatabaseIndex
    feature_map: FeatureMap


def build_domain(
    ontology_source: str | Path | None = None,
    n_venues: int = 100,
    db_seed: int = 7,
    max_turns: int = 30,
    db_file: str | Path | None = None,
) -> Domain:
    ontology = load_ontology(ontology_source)
    if db_file is not None:
        db = import_database(db_file)
    else:
        db = generate_database(ontology, n_venues=n_venues, seed=db_seed)
    return Domain(
        ontology=ontology,
        db=db,
        index=DatabaseIndex(db),
        feature_map=FeatureMap(ontology, max_turns=max_turns),
    )


# ---------------------------------------------------------------------------
# Configuration

@dataclass
class ExperimentConfig:
    variant: str
    scenario: str = ""
    n_dialogues: int = 30_000
    n_runs: int = 10
    seed: int = 0
    error_rate: float = 0.25
    problem_rate: float = 0.05
    max_turns: int = 30
    max_repeats: int = 3
    learning_rate: float = 0.01
    discount: float = 1.0
    t_start: float = 1.0
    t_end: float = 0.05
    decay_fraction: float = 0.8
    sliding_window: int = 100
    curve_stride: int = 100
    checkpoint_stride: int = 1000
    n_venues: int = 100
    db_seed: int = 7
    transfer_source: str = ""
    out_dir: str = "runs/experiment"
    log_episodes: bool = False  # full turn-by-turn logs during training

    def __post_init__(self):
        if not self.scenario:
            self.scenario = "source" if self.variant == "mdim_src" else "target"
        if self.variant == "mdim_ada" and not self.transfer_source:
            raise ValueError("mdim_ada requires transfer_source (an mdim_src experiment directory)")
        if self.sliding_window > max(self.n_dialogues, 1):
            raise ValueError("sliding_window must not exceed n_dialogues")

    @property
    def schedule(self) -> TemperatureSchedule:
        return TemperatureSchedule(
            t_start=self.t_start,
            t_end=self.t_end,
            decay_episodes=max(int(self.decay_fraction * self.n_dialogues), 1),
        )

    @property
    def user_config(self) -> UserConfig:
        return UserConfig(
            max_turns=self.max_turns,
            max_repeats=self.max_repeats,
            error_rate=self.error_rate,
            problem_rate=self.problem_rate,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return cls(**data)

    def fingerprint(self) -> str:
        import hashlib

        return hashlib.sha1(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# Single dialogue

@dataclass
class EpisodeResult:
    success: bool
    length: int
    total_reward: int
    social_events: int
    unsignalled_problems: int
    goal: UserGoal
    traces: dict[str, EpisodeTrace] | None = None
    log: dict | None = None


def run_dialogue(
    system,
    domain: Domain,
    user_config: UserConfig,
    rng: np.random.Generator,
    temperature: float = 1.0,
    explore: bool = True,
    collect_traces: bool = False,
    collect_log: bool = False,
    goal: UserGoal | None = None,
    config_fingerprint: str = "",
) -> EpisodeResult:
    """Run one dialogue to completion/hang-up.

    ``system`` is an AgentEnsemble, or any callable mapping a DialogueState to
    a list of system acts (used for scripted baselines).
    """
    ensemble = system if isinstance(system, AgentEnsemble) else None
    if goal is None:
        goal = sample_goal(domain.ontology, domain.db, rng)
    user = init_user(goal, rng, user_config)
    state = init_state()
    lookup = domain.index.by_name
    traces = {k: EpisodeTrace() for k in ensemble.agent_kinds} if (collect_traces and ensemble) else None
    turns: list[dict] | None = [] if collect_log else None

    user, outcome = user_respond(user, [], domain.db, lookup)
    total = 0
    social = 0
    unsignalled = 0
    success = False

    while True:
        true_acts = outcome.true_acts
        if maybe_processing_problem(user_config.problem_rate, rng):
            hypotheses = None
        else:
            hypotheses = apply_error_model(true_acts, user_config.error_rate, domain.ontology, rng) or None
        state = update_with_user_input(state, hypotheses, domain.ontology)

        if ensemble is not None:
            acts, selection = select_response(ensemble, state, domain.index, temperature, explore, rng)
        else:
            acts, selection = system(state), None

        state_before = state
        state = update_with_system_acts(state, acts)
        user, outcome = user_respond(user, acts, domain.db, lookup)
        breakdown = turn_reward(outcome, state_before, acts)

        total += breakdown.total
        social += outcome.social_penalty_events
        if breakdown.unsignalled_problem_penalty:
            unsignalled += 1
        if outcome.task_completed_now:
            success = True

        if traces is not None and selection is not None:
            record_traces(traces, selection)
            set_last_rewards(traces, breakdown.total)
        if turns is not None:
            turns.append({
                "user_true": [serialize_act(a) for a in true_acts],
                "hypotheses": None if hypotheses is None else [
                    [serialize_act(h.act), round(h.confidence, 4), h.corrupted] for h in hypotheses
                ],
                "state": state_before.to_record(),
                "system": [serialize_act(a) for a in acts],
                "reward": breakdown.to_record(),
            })
        if outcome.hung_up:
            break

    length = user.turn_count
    result = EpisodeResult(
        success=success,
        length=length,
        total_reward=total,
        social_events=social,
        unsignalled_problems=unsignalled,
        goal=goal,
        traces=traces,
    )
    if turns is not None:
        result.log = {
            "config_fingerprint": config_fingerprint,
            "user_config": {
                "max_turns": user_config.max_turns,
                "max_repeats": user_config.max_repeats,
                "error_rate": user_config.error_rate,
                "problem_rate": user_config.problem_rate,
            },
            "goal": {"constraints": goal.constraints, "requests": list(goal.requests)},
            "turns": turns,
            "success": success,
            "length": length,
            "total_reward": total,
            "social_events": social,
            "unsignalled_problems": unsignalled,
        }
    return result


# ---------------------------------------------------------------------------
# Ensemble persistence

def save_ensemble(ensemble: AgentEnsemble, directory: str | Path, metadata: dict | None = None) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    info = {
        "variant": ensemble.variant,
        "scenario": ensemble.scenario,
        "feature_hash": ensemble.feature_map.feature_hash(),
        **(metadata or {}),
    }
    (directory / ENSEMBLE_FILE).write_text(json.dumps(info, indent=2, sort_keys=True))
    for kind, policy in ensemble.policies.items():
        save_policy(policy, directory / f"{kind}.pol")


def load_ensemble(directory: str | Path, domain: Domain,
                  thresholds: SelectionThresholds | None = None) -> AgentEnsemble:
    directory = Path(directory)
    info = json.loads((directory / ENSEMBLE_FILE).read_text())
    fhash = domain.feature_map.feature_hash()
    template = fresh_ensemble(info["variant"], info["scenario"], domain.feature_map, thresholds)
    policies = {}
    for kind, fresh in template.policies.items():
        policies[kind] = load_policy(
            directory / f"{kind}.pol",
            expected_signature=fresh.action_set.signature(),
            expected_feature_hash=fhash,
        )
    return AgentEnsemble(
        variant=info["variant"],
        scenario=info["scenario"],
        policies=policies,
        feature_map=domain.feature_map,
        thresholds=thresholds or SelectionThresholds(),
    )


def ensemble_metadata(directory: str | Path) -> dict:
    return json.loads((Path(directory) / ENSEMBLE_FILE).read_text())


def transfer_init(config: ExperimentConfig, source_dir: str | Path, domain: Domain, run: int = 0) -> AgentEnsemble:
    """Adaptation start: AutoFeedback & SOM from the source run, Task & Evaluation fresh."""
    source_dir = Path(source_dir)
    run_dirs = sorted(source_dir.glob("run_*"))
    if run_dirs:
        source_policies = run_dirs[run % len(run_dirs)] / "policies"
    else:
        source_policies = source_dir  # a bare ensemble directory
    ensemble = fresh_ensemble(config.variant if config.variant != "mdim_src" else "multi_dim",
                              config.scenario, domain.feature_map)
    fhash = domain.feature_map.feature_hash()
    for kind in ("autofeedback", "som"):
        loaded = load_policy(
            source_policies / f"{kind}.pol",
            expected_signature=ensemble.policies[kind].action_set.signature(),
            expected_feature_hash=fhash,
        )
        # identical action sets across scenarios; re-tag for the target run
        ensemble.policies[kind] = LinearPolicy(
            action_set=ensemble.policies[kind].action_set,
            weights=loaded.weights,
            feature_hash=loaded.feature_hash,
            metadata=loaded.metadata,
        )
    return AgentEnsemble(
        variant=config.variant,
        scenario=config.scenario,
        policies=ensemble.policies,
        feature_map=domain.feature_map,
        thresholds=ensemble.thresholds,
    )


# ---------------------------------------------------------------------------
# Training

def _episode_rng(seed: int, run: int, episode: int, lane: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, run, episode, lane)))


def run_training(config: ExperimentConfig, domain: Domain | None = None, on_episode=None) -> Path:
    """Train all runs of one variant; returns the experiment directory."""
    if domain is None:
        domain = build_domain(n_venues=config.n_venues, db_seed=config.db_seed, max_turns=config.max_turns)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    resolved = {"version": __version__, "fingerprint": config.fingerprint(), **config.to_dict()}
    (out / "config.yaml").write_text(yaml.safe_dump(resolved, sort_keys=True))
    export_database(domain.db, out / "db.csv")

    schedule = config.schedule
    user_config = config.user_config

    for run in range(config.n_runs):
        run_dir = out / f"run_{run:02d}"
        _train_one_run(config, domain, schedule, user_config, run, run_dir, on_episode)
    return out


def _train_one_run(config, domain, schedule, user_config, run: int, run_dir: Path, on_episode) -> None:
    run_dir.mkdir(parents=True, exist_ok=True)
    if config.variant == "mdim_ada":
        ensemble = transfer_init(config, config.transfer_source, domain, run)
    else:
        ensemble = fresh_ensemble(config.variant, config.scenario, domain.feature_map)

    window_success: deque[int] = deque(maxlen=config.sliding_window)
    window_reward: deque[int] = deque(maxlen=config.sliding_window)
    curve_rows: list[tuple[int, float, float]] = []
    episode_rows: list[tuple] = []
    log_path = run_dir / "episodes.jsonl"
    log_fh = open(log_path, "w") if config.log_episodes else None

    started = time.perf_counter()
    fingerprint = config.fingerprint()
    for episode in range(config.n_dialogues):
        temperature = temperature_at(schedule, episode)
        rng = _episode_rng(config.seed, run, episode)
        result = run_dialogue(
            ensemble, domain, user_config, rng,
            temperature=temperature, explore=True,
            collect_traces=True, collect_log=config.log_episodes,
            config_fingerprint=fingerprint,
        )
        for kind, trace in result.traces.items():
            mc_update(ensemble.policies[kind], trace, config.learning_rate, config.discount)

        window_success.append(1 if result.success else 0)
        window_reward.append(result.total_reward)
        episode_rows.append((
            episode, int(result.success), result.length, result.total_reward,
            result.social_events, result.unsignalled_problems,
        ))
        if log_fh is not None:
            log_fh.write(json.dumps(result.log) + "\n")

        done = episode + 1
        if done % config.curve_stride == 0:
            curve_rows.append((
                done,
                100.0 * sum(window_success) / len(window_success),
                sum(window_reward) / len(window_reward),
            ))
        if config.checkpoint_stride and done % config.checkpoint_stride == 0 and done < config.n_dialogues:
            _save_run_policies(ensemble, config, run, done, temperature,
                               run_dir / "checkpoints" / f"ep{done:06d}")
        if on_episode is not None:
            on_episode(run, episode, result)

    wall = time.perf_counter() - started
    if log_fh is not None:
        log_fh.close()

    final_temperature = temperature_at(schedule, max(config.n_dialogues - 1, 0))
    _save_run_policies(ensemble, config, run, config.n_dialogues, final_temperature, run_dir / "policies")

    with open(run_dir / "curve.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "window_success_rate", "window_avg_reward"])
        writer.writerows(curve_rows)
    with open(run_dir / "episodes.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "success", "length", "total_reward", "social_events", "unsignalled_problems"])
        writer.writerows(episode_rows)
    n = max(len(episode_rows), 1)
    meta = {
        "run": run,
        "seed": config.seed,
        "episodes": config.n_dialogues,
        "wall_time_s": round(wall, 3),
        "success_rate_all": round(100.0 * sum(r[1] for r in episode_rows) / n, 3),
        "final_window_success": curve_rows[-1][1] if curve_rows else None,
    }
    (run_dir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))


def _save_run_policies(ensemble: AgentEnsemble, config: ExperimentConfig, run: int,
                       episodes_done: int, temperature: float, directory: Path) -> None:
    for policy in ensemble.policies.values():
        policy.metadata = {
            "variant": config.variant,
            "run": run,
            "train_seed": config.seed,
            "episodes_trained": episodes_done,
            "temperature": temperature,
            "learning_rate": config.learning_rate,
            "discount": config.discount,
        }
    save_ensemble(ensemble, directory, metadata={
        "episodes_trained": episodes_done,
        "temperature": temperature,
        "run": run,
    })


# ---------------------------------------------------------------------------
# Evaluation

@dataclass
class PolicyScore:
    name: str
    n_dialogues: int
    success_rate: float
    average_length: float
    average_reward: float


@dataclass
class EvalReport:
    n_dialogues: int
    success_rate: float       # percent
    average_length: float     # user turns
    average_reward: float
    exploration: str
    error_rate: float
    per_policy: list[PolicyScore] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n_dialogues": self.n_dialogues,
            "success_rate": self.success_rate,
            "average_length": self.average_length,
            "average_reward": self.average_reward,
            "exploration": self.exploration,
            "error_rate": self.error_rate,
            "per_policy": [asdict(p) for p in self.per_policy],
        }


def discover_ensembles(source: str | Path, checkpoint: str | None = None) -> list[tuple[str, Path]]:
    """Resolve a policy source: one ensemble dir, an experiment dir of runs, or a pool dir."""
    source = Path(source)
    if (source / ENSEMBLE_FILE).exists():
        return [(source.name, source)]
    found = []
    for run_dir in sorted(source.glob("run_*")):
        target = run_dir / "checkpoints" / checkpoint if checkpoint else run_dir / "policies"
        if (target / ENSEMBLE_FILE).exists():
            found.append((run_dir.name, target))
    if found:
        return found
    for sub in sorted(p for p in source.iterdir() if p.is_dir()):
        if (sub / ENSEMBLE_FILE).exists():
            found.append((sub.name, sub))
    if not found:
        raise FileNotFoundError(f"no ensembles found under {source}")
    return found


def run_evaluation(
    domain: Domain,
    policy_source: str | Path,
    n_dialogues: int = 3000,
    error_rate: float = 0.25,
    problem_rate: float = 0.05,
    exploration: str = "off",
    seed: int = 0,
    checkpoint: str | None = None,
    max_turns: int = 30,
    max_repeats: int = 3,
    out_dir: str | Path | None = None,
) -> EvalReport:
    """Round-robin evaluation of a policy pool with exploration off or at the
    temperature the policies were saved with."""
    if exploration not in ("off", "on"):
        raise ValueError("exploration must be 'off' or 'on'")
    members = discover_ensembles(policy_source, checkpoint)
    pool = []
    for name, directory in members:
        ensemble = load_ensemble(directory, domain)
        meta = ensemble_metadata(directory)
        pool.append((name, ensemble, float(meta.get("temperature", 1.0))))

    user_config = UserConfig(
        max_turns=max_turns, max_repeats=max_repeats,
        error_rate=error_rate, problem_rate=problem_rate,
    )
    resolved = {
        "version": __version__,
        "policy_source": str(policy_source),
        "checkpoint": checkpoint,
        "n_dialogues": n_dialogues,
        "error_rate": error_rate,
        "problem_rate": problem_rate,
        "exploration": exploration,
        "seed": seed,
        "pool": [name for name, _, _ in pool],
    }
    import hashlib

    fingerprint = hashlib.sha1(json.dumps(resolved, sort_keys=True).encode()).hexdigest()[:12]
    log_fh = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "eval_config.json").write_text(json.dumps({**resolved, "fingerprint": fingerprint},
                                                             indent=2, sort_keys=True))
        log_fh = open(out_dir / "episodes.jsonl", "w")

    stats = {name: [0, 0, 0, 0.0] for name, _, _ in pool}  # n, successes, length sum, reward sum
    for i in range(n_dialogues):
        name, ensemble, temperature = pool[i % len(pool)]
        rng = _episode_rng(seed, 10_000_019, i)
        result = run_dialogue(
            ensemble, domain, user_config, rng,
            temperature=temperature if exploration == "on" else 1.0,
            explore=(exploration == "on"),
            collect_log=log_fh is not None,
            config_fingerprint=fingerprint,
        )
        entry = stats[name]
        entry[0] += 1
        entry[1] += 1 if result.success else 0
        entry[2] += result.length
        entry[3] += result.total_reward
        if log_fh is not None:
            result.log["policy"] = name
            log_fh.write(json.dumps(result.log) + "\n")
    if log_fh is not None:
        log_fh.close()

    per_policy = [
        PolicyScore(
            name=name,
            n_dialogues=n,
            success_rate=100.0 * wins / n if n else 0.0,
            average_length=lengths / n if n else 0.0,
            average_reward=rewards / n if n else 0.0,
        )
        for name, (n, wins, lengths, rewards) in stats.items()
    ]
    total_n = sum(p.n_dialogues for p in per_policy)
    report = EvalReport(
        n_dialogues=total_n,
        success_rate=sum(p.success_rate * p.n_dialogues for p in per_policy) / total_n,
        average_length=sum(p.average_length * p.n_dialogues for p in per_policy) / total_n,
        average_reward=sum(p.average_reward * p.n_dialogues for p in per_policy) / total_n,
        exploration=exploration,
        error_rate=error_rate,
        per_policy=per_policy,
    )
    if out_dir is not None:
        (Path(out_dir) / "report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return report


# ---------------------------------------------------------------------------
# Learning curves

@dataclass
class CurveSummary:
    label: str
    episodes: np.ndarray
    success_mean: np.ndarray
    success_std: np.ndarray
    reward_mean: np.ndarray
    reward_std: np.ndarray
    n_runs: int


def load_run_curve(run_dir: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows = np.genfromtxt(Path(run_dir) / "curve.csv", delimiter=",", names=True)
    rows = np.atleast_1d(rows)
    return rows["episode"], rows["window_success_rate"], rows["window_avg_reward"]


def aggregate_curves(experiment_dir: str | Path, label: str | None = None) -> CurveSummary:
    """Mean ± stddev over an experiment's runs at each curve sample."""
    experiment_dir = Path(experiment_dir)
    run_dirs = sorted(experiment_dir.glob("run_*"))
    if not run_dirs:
        raise FileNotFoundError(f"no runs under {experiment_dir}")
    episodes = None
    success, reward = [], []
    for run_dir in run_dirs:
        ep, s, r = load_run_curve(run_dir)
        if episodes is None:
            episodes = ep
        elif len(ep) != len(episodes) or not np.array_equal(ep, episodes):
            raise ValueError(f"curve sample points differ between runs in {experiment_dir}")
        success.append(s)
        reward.append(r)
    success = np.vstack(success)
    reward = np.vstack(reward)
    if label is None:
        try:
            label = yaml.safe_load((experiment_dir / "config.yaml").read_text())["variant"]
        except FileNotFoundError:
            label = experiment_dir.name
    return CurveSummary(
        label=label,
        episodes=episodes,
        success_mean=success.mean(axis=0),
        success_std=success.std(axis=0),
        reward_mean=reward.mean(axis=0),
        reward_std=reward.std(axis=0),
        n_runs=len(run_dirs),
    )


def export_curves(summaries: list[CurveSummary], destination: str | Path) -> Path:
    """Write the combined per-variant curve table (CSV, one row per sample)."""
    destination = Path(destination)
    destination.parent.mkdir(parents=True, exist_ok=True)
    with open(destination, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "variant", "episode", "success_mean", "success_std",
            "reward_mean", "reward_std", "n_runs",
        ])
        for s in summaries:
            for i in range(len(s.episodes)):
                writer.writerow([
                    s.label, int(s.episodes[i]),
                    repr(float(s.success_mean[i])), repr(float(s.success_std[i])),
                    repr(float(s.reward_mean[i])), repr(float(s.reward_std[i])),
                    s.n_runs,
                ])
    return destination


def import_curves(source: str | Path) -> list[CurveSummary]:
    """Inverse of export_curves: rebuild the per-variant summaries."""
    grouped: dict[str, list[tuple]] = {}
    n_runs: dict[str, int] = {}
    with open(source, newline="") as fh:
        for row in csv.DictReader(fh):
            grouped.setdefault(row["variant"], []).append((
                int(row["episode"]), float(row["success_mean"]), float(row["success_std"]),
                float(row["reward_mean"]), float(row["reward_std"]),
            ))
            n_runs[row["variant"]] = int(row["n_runs"])
    out = []
    for label, rows in grouped.items():
        arr = np.array(rows)
        out.append(CurveSummary(
            label=label,
            episodes=arr[:, 0],
            success_mean=arr[:, 1],
            success_std=arr[:, 2],
            reward_mean=arr[:, 3],
            reward_std=arr[:, 4],
            n_runs=n_runs[label],
        ))
    return out
