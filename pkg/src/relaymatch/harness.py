"""Experiment orchestration: period loop, Monte Carlo replication, file output.

A replication simulates one topology for a fixed horizon of synchronous
periods. Per period: collect proposals, let every D2D pair choose, draw the
fading realizations, hand every agent its observation, and record metrics.
Replications are seeded independently from the experiment seed through
numpy's SeedSequence, so results are reproducible bit-for-bit and independent
of execution order; the per-period draws inside a replication come from one
stdlib ``random.Random`` stream, which keeps the loop cheap.

Throughput accounting per period: a matched CU contributes its realized
relayed frame rate (1 - alpha) * r, an unmatched CU its realized direct rate,
and a matched D2D pair the rate of its alpha share of the frame. The CU-only
portion is also tracked separately. The ``expected`` throughput mode swaps
realized rates for their expectations in the metrics (learning still sees
noisy samples).
"""

from __future__ import annotations

import math
import random as _random
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .channel import Topology, generate_topology, snr_scales, true_rates
from .errors import ConfigurationError
from .game import TieBreakRule, choice_winners
from .learners import (
    EbriQAgent,
    EpsilonGreedyAgent,
    FixedProposalAgent,
    NonCoopAgent,
    PeriodObservation,
    RandomAgent,
)
from .matching import Matching, build_preferences, gale_shapley, is_stable
from .params import LearningParams, SystemParams, TopologyParams

__all__ = [
    "POLICIES",
    "ExperimentConfig",
    "PeriodMetrics",
    "SimEnvironment",
    "ResultSet",
    "make_agents",
    "run_period",
    "run_replication",
    "run_experiment",
    "emit_csv",
    "write_manifest",
]

POLICIES = ("ebriq", "epsilon_greedy", "random", "noncoop", "gs_oracle")
THROUGHPUT_MODES = ("sampled", "expected")

CSV_HEADER = "period,mean_throughput,sm_fraction,mean_alpha_ratio,policy"


@dataclass(frozen=True)
class ExperimentConfig:
    topology: TopologyParams = TopologyParams()
    system: SystemParams = SystemParams()
    learning: LearningParams = LearningParams()
    policy: str = "ebriq"
    num_replications: int = 1
    seed: int = 0
    fixed_topology: bool = True
    throughput_mode: str = "sampled"

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ConfigurationError(
                f"unknown policy {self.policy!r}; expected one of {', '.join(POLICIES)}"
            )
        if self.throughput_mode not in THROUGHPUT_MODES:
            raise ConfigurationError(
                f"unknown throughput_mode {self.throughput_mode!r}; "
                f"expected one of {', '.join(THROUGHPUT_MODES)}"
            )
        if self.num_replications < 1:
            raise ConfigurationError(
                f"num_replications (={self.num_replications}) must be >= 1"
            )
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError(
                f"seed (={self.seed}) must be an unsigned 64-bit integer"
            )


class PeriodMetrics(NamedTuple):
    period: int
    system_throughput: float  # CU frame rates plus matched pairs' D2D rates
    cu_throughput: float  # CU frame rates only
    sm_indicator: bool  # induced matching is stable under the true preferences
    mean_alpha_ratio: float  # mean over matched pairs of estimate/true alpha; NaN if none
    num_matched: int


class SimEnvironment:
    """One topology with everything the harness (not the agents) knows."""

    def __init__(self, topology: Topology, sys: SystemParams, tie_break_seed: int = 0):
        self.topology = topology
        self.sys = sys
        self.rates = true_rates(topology, sys)
        self.prefs = build_preferences(self.rates, sys)
        self.rule = TieBreakRule.for_instance(self.prefs, seed=tie_break_seed)
        c_cu, c_dt, c_dd = snr_scales(topology, sys)
        self.c_cu = [float(c) for c in c_cu]
        self.c_dt = [float(c) for c in c_dt]
        self.c_dd = [float(c) for c in c_dd]
        self.direct_rates = [float(r) for r in self.rates.direct_rates]
        self.relay_rates = [list(map(float, row)) for row in self.rates.relay_rates]
        self.d2d_rates = [float(r) for r in self.rates.d2d_rates]
        self.alpha_star = [list(map(float, row)) for row in self.prefs.d2d_scores]
        self.num_cus = topology.num_cus
        self.num_d2d = topology.num_d2d
        self._stability_cache: dict = {}

    def matching_is_stable(self, winners) -> bool:
        """Stability of the matching given by each pair's chosen CU (cached)."""
        key = tuple(winners)
        cached = self._stability_cache.get(key)
        if cached is None:
            cu_partner = [None] * self.num_cus
            for n, m in enumerate(winners):
                if m is not None:
                    cu_partner[m] = n
            mu = Matching(tuple(cu_partner), key)
            cached = is_stable(mu, self.prefs)
            self._stability_cache[key] = cached
        return cached


def make_agents(policy: str, env: SimEnvironment, learning: LearningParams,
                epsilon: float = 0.1) -> list:
    """Fresh per-CU agents for one replication."""
    m_range = range(env.num_cus)
    if policy == "ebriq":
        return [
            EbriQAgent(m, env.num_cus, env.num_d2d, env.direct_rates[m],
                       env.sys, learning, env.rule.bias)
            for m in m_range
        ]
    if policy == "epsilon_greedy":
        return [
            EpsilonGreedyAgent(m, env.num_cus, env.num_d2d, env.direct_rates[m],
                               env.sys, epsilon=epsilon)
            for m in m_range
        ]
    if policy == "random":
        return [RandomAgent(env.num_d2d, env.sys) for _ in m_range]
    if policy == "noncoop":
        return [NonCoopAgent() for _ in m_range]
    if policy == "gs_oracle":
        mu = gale_shapley(env.prefs)
        return [
            FixedProposalAgent(
                mu.cu_partner[m],
                None if mu.cu_partner[m] is None else env.alpha_star[m][mu.cu_partner[m]],
            )
            for m in m_range
        ]
    raise ConfigurationError(f"unknown policy {policy!r}")


def run_period(env: SimEnvironment, agents, t: int, rng: _random.Random,
               sampled: bool = True) -> PeriodMetrics:
    """One synchronous round; mutates the agents, returns the period metrics."""
    proposals = tuple(agent.act(t, rng) for agent in agents)
    winners = choice_winners(proposals, env.rule, env.num_d2d)

    expovariate = rng.expovariate
    log1p = math.log1p
    cu_throughput = 0.0
    d2d_throughput = 0.0
    num_matched = 0
    ratio_sum = 0.0
    rate_samples = [None] * env.num_cus
    matched_cu = [False] * env.num_cus
    for n, m in enumerate(winners):
        if m is None:
            continue
        num_matched += 1
        matched_cu[m] = True
        alpha = proposals[m].alpha
        sample = 0.5 * (
            log1p(env.c_cu[m] * expovariate(1.0)) + log1p(env.c_dt[n] * expovariate(1.0))
        )
        rate_samples[m] = sample
        if sampled:
            cu_throughput += (1.0 - alpha) * sample
            d2d_throughput += alpha * log1p(env.c_dd[n] * expovariate(1.0))
        else:
            cu_throughput += (1.0 - alpha) * env.relay_rates[m][n]
            d2d_throughput += alpha * env.d2d_rates[n]
        ratio_sum += agents[m].alpha_estimate(n) / env.alpha_star[m][n]
    for m in range(env.num_cus):
        if not matched_cu[m]:
            if sampled:
                cu_throughput += log1p(env.c_cu[m] * expovariate(1.0))
            else:
                cu_throughput += env.direct_rates[m]

    winners = tuple(winners)
    for m, agent in enumerate(agents):
        agent.update(PeriodObservation(proposals, winners, rate_samples[m]), t)

    return PeriodMetrics(
        period=t,
        system_throughput=cu_throughput + d2d_throughput,
        cu_throughput=cu_throughput,
        sm_indicator=env.matching_is_stable(winners),
        mean_alpha_ratio=ratio_sum / num_matched if num_matched else math.nan,
        num_matched=num_matched,
    )


class ReplicationTrace(NamedTuple):
    """Per-period series of one replication plus the final estimator state."""

    system_throughput: np.ndarray
    cu_throughput: np.ndarray
    sm_indicator: np.ndarray
    mean_alpha_ratio: np.ndarray
    final_alpha_ratio: np.ndarray  # (M, N); NaN where the pair was never sampled


def run_replication(env: SimEnvironment, policy: str, learning: LearningParams,
                    rng: _random.Random, horizon: Optional[int] = None,
                    throughput_mode: str = "sampled") -> ReplicationTrace:
    """Simulate one seeded replication over the full horizon."""
    horizon = learning.horizon if horizon is None else horizon
    sampled = throughput_mode == "sampled"
    agents = make_agents(policy, env, learning)
    system = np.empty(horizon)
    cu_only = np.empty(horizon)
    sm = np.empty(horizon, dtype=bool)
    ratio = np.empty(horizon)
    for t in range(1, horizon + 1):
        metrics = run_period(env, agents, t, rng, sampled)
        i = t - 1
        system[i] = metrics.system_throughput
        cu_only[i] = metrics.cu_throughput
        sm[i] = metrics.sm_indicator
        ratio[i] = metrics.mean_alpha_ratio
    final_ratio = np.full((env.num_cus, env.num_d2d), np.nan)
    for m, agent in enumerate(agents):
        counts = getattr(agent, "coop_counts", None)
        if counts is None:
            continue
        for n in range(env.num_d2d):
            if counts[n] > 0:
                final_ratio[m, n] = agent.alpha_estimate(n) / env.alpha_star[m][n]
    return ReplicationTrace(system, cu_only, sm, ratio, final_ratio)


@dataclass
class ResultSet:
    """Replication-averaged series plus per-replication summaries."""

    config: ExperimentConfig
    periods: np.ndarray
    mean_throughput: np.ndarray  # system throughput, mean over replications
    mean_cu_throughput: np.ndarray
    sm_fraction: np.ndarray
    mean_alpha_ratio: np.ndarray  # NaN-aware mean over replications
    window_start: int  # first period index of the final-10% window
    rep_window_throughput: np.ndarray  # (R,) final-window mean per replication
    rep_window_sm: np.ndarray  # (R,)
    rep_final_alpha_ratio: np.ndarray  # (R, M, N)

    @property
    def window_mean_throughput(self) -> float:
        return float(self.rep_window_throughput.mean())

    @property
    def window_sm_fraction(self) -> float:
        return float(self.rep_window_sm.mean())


def _replication_rng(seed: int, rep: int) -> _random.Random:
    state = np.random.SeedSequence([seed, 1, rep]).generate_state(2, dtype=np.uint64)
    return _random.Random(int(state[0]) << 64 | int(state[1]))


def _topology_rng(seed: int, rep: Optional[int]) -> np.random.Generator:
    key = [seed, 0] if rep is None else [seed, 2, rep]
    return np.random.default_rng(np.random.SeedSequence(key))


def run_experiment(config: ExperimentConfig, out_dir=None) -> ResultSet:
    """Run all replications of one policy and aggregate per-period metrics.

    Seeds are derived per replication from ``config.seed`` with a splittable
    scheme, so any execution order yields identical results. With
    ``fixed_topology`` one topology (and its derived preferences) is shared
    by every replication; otherwise each replication draws its own. When
    ``out_dir`` is given, the per-policy CSV and the run manifest are
    written there.
    """
    horizon = config.learning.horizon
    reps = config.num_replications
    shared_env = None
    if config.fixed_topology:
        topology = generate_topology(config.topology, _topology_rng(config.seed, None))
        shared_env = SimEnvironment(topology, config.system)

    sum_system = np.zeros(horizon)
    sum_cu = np.zeros(horizon)
    sum_sm = np.zeros(horizon)
    sum_ratio = np.zeros(horizon)
    cnt_ratio = np.zeros(horizon, dtype=np.int64)
    window_start = horizon - max(1, horizon // 10)
    rep_window_throughput = np.empty(reps)
    rep_window_sm = np.empty(reps)
    final_ratios = np.empty((reps, config.topology.num_cus, config.topology.num_d2d))

    for rep in range(reps):
        if shared_env is not None:
            env = shared_env
        else:
            topology = generate_topology(config.topology, _topology_rng(config.seed, rep))
            env = SimEnvironment(topology, config.system)
        trace = run_replication(
            env, config.policy, config.learning,
            _replication_rng(config.seed, rep),
            horizon=horizon, throughput_mode=config.throughput_mode,
        )
        sum_system += trace.system_throughput
        sum_cu += trace.cu_throughput
        sum_sm += trace.sm_indicator
        seen = ~np.isnan(trace.mean_alpha_ratio)
        sum_ratio[seen] += trace.mean_alpha_ratio[seen]
        cnt_ratio += seen
        rep_window_throughput[rep] = trace.system_throughput[window_start:].mean()
        rep_window_sm[rep] = trace.sm_indicator[window_start:].mean()
        final_ratios[rep] = trace.final_alpha_ratio

    with np.errstate(invalid="ignore"):
        mean_ratio = np.where(cnt_ratio > 0, sum_ratio / np.maximum(cnt_ratio, 1), np.nan)
    results = ResultSet(
        config=config,
        periods=np.arange(1, horizon + 1),
        mean_throughput=sum_system / reps,
        mean_cu_throughput=sum_cu / reps,
        sm_fraction=sum_sm / reps,
        mean_alpha_ratio=mean_ratio,
        window_start=window_start,
        rep_window_throughput=rep_window_throughput,
        rep_window_sm=rep_window_sm,
        rep_final_alpha_ratio=final_ratios,
    )
    if out_dir is not None:
        out_dir = Path(out_dir)
        emit_csv(results, out_dir / f"{config.policy}.csv")
        write_manifest(config, out_dir / "manifest.txt")
    return results


def _format(value: float) -> str:
    return f"{value:.9g}"


def emit_csv(results: ResultSet, path) -> None:
    """Write the per-period aggregates; deterministic byte-for-byte."""
    if len(results.periods) == 0:
        raise ValueError("results are empty")
    path = Path(path)
    lines = [CSV_HEADER]
    policy = results.config.policy
    for i, t in enumerate(results.periods):
        lines.append(
            f"{t},{_format(results.mean_throughput[i])},"
            f"{_format(results.sm_fraction[i])},"
            f"{_format(results.mean_alpha_ratio[i])},{policy}"
        )
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def write_manifest(config: ExperimentConfig, path) -> None:
    """Record the fully resolved experiment configuration."""
    path = Path(path)
    c = config
    entries = {
        "topology.num_cus": c.topology.num_cus,
        "topology.num_d2d": c.topology.num_d2d,
        "topology.cell_radius": c.topology.cell_radius,
        "topology.cu_min_bs_distance": c.topology.cu_min_bs_distance,
        "topology.dt_bs_distance_low": c.topology.dt_bs_distance_range[0],
        "topology.dt_bs_distance_high": c.topology.dt_bs_distance_range[1],
        "topology.d2d_link_low": c.topology.d2d_link_range[0],
        "topology.d2d_link_high": c.topology.d2d_link_range[1],
        "topology.path_loss_exponent": c.topology.path_loss_exponent,
        "system.p_c": c.system.p_c,
        "system.p_d": c.system.p_d,
        "system.n_0": c.system.n_0,
        "system.alpha_low": c.system.alpha_low,
        "system.alpha_high": c.system.alpha_high,
        "system.theta": c.system.theta,
        "system.theta_prime": c.system.theta_prime,
        "learning.epsilon0": c.learning.epsilon0,
        "learning.zeta": c.learning.zeta,
        "learning.xi": c.learning.xi,
        "learning.memory_length": c.learning.memory_length,
        "learning.horizon": c.learning.horizon,
        "experiment.policy": c.policy,
        "experiment.num_replications": c.num_replications,
        "experiment.seed": c.seed,
        "experiment.fixed_topology": str(c.fixed_topology).lower(),
        "experiment.throughput_mode": c.throughput_mode,
    }
    text = "\n".join(f"{key} = {value}" for key, value in entries.items()) + "\n"
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write manifest to {path}: {exc}") from exc
