"""Training runs, the multi-spectrum benchmark and episode replay."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .env import DecouplingEnv, EpisodeConfig, reward_fn
from .filterfn import QuadratureConfig, filter_values
from .qnet import (
    Adam,
    AgentHyperparams,
    EpsilonSchedule,
    NonFiniteLossError,
    QNetwork,
    ReplayBuffer,
    backward_and_step,
    init_network,
    select_action,
    soft_update,
)
from .sequences import Family, SequenceFamily, make_sequence
from .spectra import generate_spectrum
from .thompson import N_ACTIONS, ActionId, format_word, parse_word

log = logging.getLogger(__name__)

SEED_RULE = (
    "seed(stream, *keys) = SeedSequence(entropy=master_seed, spawn_key=(stream, *keys))"
    ".generate_state(1, uint64)[0]; streams: 0=spectrum(i), 1=prdd(i), 2=agent(i, family_index)"
)
QUANTILE_RULE = "linear interpolation between order statistics: q_p = x[floor(h)] + (h - floor(h)) * (x[floor(h)+1] - x[floor(h)]), h = (n - 1) p"

SPECTRUM_STREAM, PRDD_STREAM, AGENT_STREAM = 0, 1, 2
FAMILY_ORDER = [f.value for f in Family]


def derive_seed(master_seed: int, stream: int, *keys: int) -> int:
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(stream), *map(int, keys)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class TrainResult:
    initial_infidelity: float
    best_infidelity: float
    best_episode: int
    best_word: str
    best_times: list[float]
    episodes_completed: int
    rewards: list[float]
    infidelities: list[float]
    epsilons: list[float]
    n_fidelity_evals: int
    aborted: str | None = None
    online: QNetwork | None = field(default=None, repr=False)
    target: QNetwork | None = field(default=None, repr=False)


Policy = Callable[[np.ndarray, int], ActionId]


def train_one(
    env_config: EpisodeConfig,
    hyper: AgentHyperparams,
    seed: int,
    episodes: int | None = None,
    policy: Policy | None = None,
) -> TrainResult:
    """Run the DDQN episode loop and keep the best terminal sequence seen.

    ``policy`` replaces the epsilon-greedy behaviour (the network still
    learns from the resulting transitions); it receives the normalised state
    and the step index.
    """
    episodes = hyper.episodes if episodes is None else episodes
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    env = DecouplingEnv(env_config)
    n, T, M = env_config.n_pulses, env_config.total_time, env_config.max_steps
    init_ss, policy_ss, replay_ss = np.random.SeedSequence(int(seed)).spawn(3)
    online = init_network([n, hyper.hidden, hyper.hidden, N_ACTIONS], np.random.default_rng(init_ss))
    target = online.copy()
    opt = Adam(online.params, hyper.learning_rate, hyper.adam_beta1, hyper.adam_beta2, hyper.adam_eps)
    rng_policy = np.random.default_rng(policy_ss)
    rng_replay = np.random.default_rng(replay_ss)
    buffer = ReplayBuffer(hyper.buffer_capacity, n)
    p_init = env_config.p_initial
    sched = EpsilonSchedule(reward_fn(p_init, p_init), hyper.initial_epsilon, hyper.review_period)

    best = (math.inf, -1, "", [])
    rewards, infids, epsilons = [], [], []
    aborted = None
    completed = 0
    for ep in range(episodes):
        times = env.reset()
        obs = times / T
        word = []
        tr = None
        try:
            for k in range(M):
                if policy is None:
                    action = select_action(online, obs, sched.epsilon, rng_policy)
                else:
                    action = ActionId(policy(obs, k))
                tr = env.step(action)
                next_obs = tr.next_state / T
                buffer.add(obs, action, tr.reward, next_obs, tr.terminal)
                word.append(action)
                if len(buffer) >= hyper.min_minibatch:
                    batch = buffer.sample(rng_replay, hyper.minibatch)
                    backward_and_step(online, batch, target, hyper, opt)
                    soft_update(target, online, hyper.tau, hyper.soft_update_convention)
                obs = next_obs
        except NonFiniteLossError as exc:
            aborted = f"episode {ep}: {exc}"
            log.error("run aborted: %s", aborted)
            break
        infid = 1.0 - tr.p_final
        if infid < best[0]:
            best = (infid, ep, format_word(word), [float(t) for t in tr.next_state])
        rewards.append(tr.reward)
        infids.append(infid)
        epsilons.append(sched.epsilon)
        completed = ep + 1
        sched.update(completed, tr.reward)

    return TrainResult(
        initial_infidelity=1.0 - p_init,
        best_infidelity=best[0],
        best_episode=best[1],
        best_word=best[2],
        best_times=best[3],
        episodes_completed=completed,
        rewards=rewards,
        infidelities=infids,
        epsilons=epsilons,
        n_fidelity_evals=env.n_fidelity_evals,
        aborted=aborted,
        online=online,
        target=target,
    )


# -- statistics -----------------------------------------------------------------


def describe(values: Sequence[float]) -> dict:
    """Box-and-whisker statistics: extremes, quartiles, median, mean."""
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        return {"count": 0}
    q1, med, q3 = np.percentile(x, [25, 50, 75], method="linear")
    return {
        "count": int(x.size),
        "min": float(x[0]),
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "max": float(x[-1]),
        "mean": float(np.mean(x)),
    }


# -- benchmark ------------------------------------------------------------------


@dataclass
class RunConfig:
    n_pulses: int = 10
    total_time: float = 1.0
    n_lorentzians: int = 5
    norm_target: float = 10.0
    n_spectra: int = 10
    episodes: int = 1500
    steps_per_episode: int = 32
    families: tuple[str, ...] = ("cpmg",)
    master_seed: int = 0
    jobs: int = 1
    agent: AgentHyperparams = field(default_factory=AgentHyperparams)
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)

    def __post_init__(self):
        self.families = tuple(Family(f).value for f in self.families)
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if self.n_spectra < 1:
            raise ValueError("n_spectra must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["families"] = list(self.families)
        return d


@dataclass
class RunEntry:
    spectrum_index: int
    spectrum_seed: int
    family: str
    agent_seed: int
    initial_infidelity: float
    best_infidelity: float
    best_episode: int
    best_word: str
    best_times: list[float]
    episodes_completed: int
    aborted: str | None = None


@dataclass
class RunReport:
    config: dict
    runs: list[RunEntry]
    aggregates: dict
    quantile_rule: str = QUANTILE_RULE
    seed_rule: str = SEED_RULE

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "quantile_rule": self.quantile_rule,
            "seed_rule": self.seed_rule,
            "aggregates": self.aggregates,
            "runs": [asdict(r) for r in self.runs],
        }


def spectrum_for(cfg: RunConfig, index: int):
    return generate_spectrum(
        cfg.n_pulses, cfg.total_time, cfg.n_lorentzians, cfg.norm_target,
        derive_seed(cfg.master_seed, SPECTRUM_STREAM, index),
    )


def initial_sequence_for(cfg: RunConfig, family: str, index: int):
    seed = derive_seed(cfg.master_seed, PRDD_STREAM, index) if family == Family.PRDD.value else None
    return make_sequence(SequenceFamily(Family(family), cfg.n_pulses, cfg.total_time, rng_seed=seed))


def episode_config_for(cfg: RunConfig, family: str, index: int) -> EpisodeConfig:
    return EpisodeConfig(
        initial_sequence_for(cfg, family, index), spectrum_for(cfg, index), cfg.steps_per_episode, cfg.quad
    )


def _run_task(args) -> RunEntry:
    cfg, index, family = args
    env_config = episode_config_for(cfg, family, index)
    agent_seed = derive_seed(cfg.master_seed, AGENT_STREAM, index, FAMILY_ORDER.index(family))
    hyper = replace(cfg.agent, episodes=cfg.episodes, steps_per_episode=cfg.steps_per_episode)
    res = train_one(env_config, hyper, agent_seed)
    entry = RunEntry(
        spectrum_index=index,
        spectrum_seed=env_config.spectrum.seed,
        family=family,
        agent_seed=agent_seed,
        initial_infidelity=res.initial_infidelity,
        best_infidelity=res.best_infidelity,
        best_episode=res.best_episode,
        best_word=res.best_word,
        best_times=res.best_times,
        episodes_completed=res.episodes_completed,
        aborted=res.aborted,
    )
    log.info(
        "spectrum %d %s: 1-p %.6g -> %.6g (episode %d)",
        index, family, entry.initial_infidelity, entry.best_infidelity, entry.best_episode,
    )
    return entry


def aggregate(runs: Sequence[RunEntry], families: Sequence[str]) -> dict:
    out = {}
    for fam in families:
        done = [r for r in runs if r.family == fam and r.episodes_completed > 0 and math.isfinite(r.best_infidelity)]
        init = describe([r.initial_infidelity for r in done])
        best = describe([r.best_infidelity for r in done])
        entry = {
            "completed_runs": len(done),
            "aborted_runs": sum(1 for r in runs if r.family == fam and r.aborted),
            "initial": init,
            "optimized": best,
            "improved_runs": sum(1 for r in done if r.best_infidelity <= r.initial_infidelity),
        }
        if done and best["median"] > 0 and best["mean"] > 0:
            entry["median_reduction_factor"] = init["median"] / best["median"]
            entry["mean_reduction_factor"] = init["mean"] / best["mean"]
        out[fam] = entry
    return out


def benchmark(cfg: RunConfig, jobs: int | None = None) -> RunReport:
    """Train one agent per (spectrum, initial family) and summarise the populations.

    Run seeds depend only on the master seed and the task indices, so the
    report is identical for any worker count.
    """
    jobs = cfg.jobs if jobs is None else jobs
    tasks = [(cfg, i, fam) for i in range(cfg.n_spectra) for fam in cfg.families]
    if jobs <= 1:
        runs = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_run_task, tasks))
    resolved = cfg.to_dict()
    resolved.pop("jobs")
    return RunReport(resolved, runs, aggregate(runs, cfg.families))


# -- replay ---------------------------------------------------------------------


@dataclass
class StepRecord:
    step: int
    action: str
    times: list[float]
    infidelity: float


@dataclass
class TraceResult:
    records: list[StepRecord]
    filters: dict[int, tuple[np.ndarray, np.ndarray]]
    word: str

    @property
    def terminal_infidelity(self) -> float:
        return self.records[-1].infidelity


def trace_episode(env_config: EpisodeConfig, word, omega=None) -> TraceResult:
    """Replay a fixed action word, reporting every intermediate state.

    Filter samples are taken at steps ``0``, ``M // 2`` and ``M``.
    """
    actions = parse_word(word) if isinstance(word, str) else [ActionId(a) for a in word]
    M = env_config.max_steps
    if len(actions) != M:
        raise ValueError(f"action word has {len(actions)} actions, episode needs {M}")
    T = env_config.total_time
    if omega is None:
        omega = np.linspace(0.0, 2.0 * np.pi * 2 * env_config.n_pulses / T * 1.5, 1201)
    env = DecouplingEnv(env_config)
    times = env.reset()
    snap = {0, M // 2, M}
    records = [StepRecord(0, "", times.tolist(), 1.0 - env_config.p_initial)]
    filters = {0: (omega, filter_values(times, T, omega))}
    for k, a in enumerate(actions, start=1):
        tr = env.step(a)
        p = tr.p_final if tr.terminal else env_config.fidelity(tr.next_state)
        records.append(StepRecord(k, a.tag, tr.next_state.tolist(), 1.0 - p))
        if k in snap:
            filters[k] = (omega, filter_values(tr.next_state, T, omega))
    return TraceResult(records, filters, format_word(actions))
