"""Per-CU decision policies driven by period-level observations.

Each agent owns one CU's state. A period is a synchronous round: every agent
emits a proposal, every D2D pair picks a proposer, and every agent then sees
the joint proposals, the choices, and (if it cooperated) its realized relay
rate. Agents never see true expected rates other than their own direct rate.

``EbriQAgent`` is the main policy: it keeps a running-mean estimate of each
pair's relay rate (so the implied bargained allocation converges to the true
one), remembers the last few joint target selections, and outside of a
decaying exploration phase plays better replies with inertia against that
memory, scoring candidate targets with its estimated utilities. Exploring
proposals occasionally carry an oversized allocation that any pair accepts,
which guarantees every pair keeps being sampled.
"""

from __future__ import annotations

from collections import deque
from typing import NamedTuple, Optional, Sequence

from .game import PASS, Proposal
from .params import LearningParams, SystemParams

__all__ = [
    "PeriodObservation",
    "epsilon_schedule",
    "EbriQAgent",
    "EpsilonGreedyAgent",
    "RandomAgent",
    "NonCoopAgent",
    "FixedProposalAgent",
]

_NEG_INF = float("-inf")


class PeriodObservation(NamedTuple):
    """What one CU sees at the end of a period.

    ``own_rate_sample`` is present exactly when this CU's target picked it.
    """

    proposals: tuple
    d2d_choices: tuple
    own_rate_sample: Optional[float]


def epsilon_schedule(t: int, epsilon0: float, num_cus: int, memory_length: int) -> float:
    """Decaying exploration probability epsilon0 * t^(-1/(M*L))."""
    return epsilon0 * t ** (-1.0 / (num_cus * memory_length))


class _RateEstimator:
    """Shared estimator state: relay-rate running means and implied allocations.

    The estimate after k cooperation samples equals
    (initial + sum of samples) / (1 + k) exactly: each update uses the step
    size 1/(1 + count) with the count including the new sample.
    """

    __slots__ = (
        "index", "num_cus", "num_d2d", "direct_rate", "sys",
        "rate_estimates", "coop_counts", "own_alphas",
    )

    def __init__(self, index: int, num_cus: int, num_d2d: int,
                 direct_rate: float, sys: SystemParams):
        self.index = index
        self.num_cus = num_cus
        self.num_d2d = num_d2d
        self.direct_rate = direct_rate
        self.sys = sys
        # Optimistic start: high enough that every pair initially looks
        # acceptable, so the better-reply branch cannot starve exploration.
        init = direct_rate / (1.0 - sys.alpha_high) + 1e-6
        self.rate_estimates = [init] * num_d2d
        self.coop_counts = [0] * num_d2d
        self.own_alphas = [self._alpha_of(init)] * num_d2d

    def _alpha_of(self, rate_estimate: float) -> float:
        alpha = (rate_estimate - self.direct_rate) / (2.0 * rate_estimate)
        sys = self.sys
        return min(max(alpha, sys.alpha_low), sys.alpha_high)

    def record_cooperation(self, n: int, rate_sample: float) -> None:
        self.coop_counts[n] += 1
        step = 1.0 / (1.0 + self.coop_counts[n])
        estimate = self.rate_estimates[n] + step * (rate_sample - self.rate_estimates[n])
        self.rate_estimates[n] = estimate
        self.own_alphas[n] = self._alpha_of(estimate)

    def _check_observation(self, obs: PeriodObservation) -> Optional[int]:
        """Return the pair cooperated with this period, validating the sample."""
        own = obs.proposals[self.index]
        chosen = own.target is not None and obs.d2d_choices[own.target] == self.index
        if chosen and obs.own_rate_sample is None:
            raise ValueError("chosen by target but own_rate_sample missing")
        if not chosen and obs.own_rate_sample is not None:
            raise ValueError("own_rate_sample present although not chosen")
        return own.target if chosen else None

    def alpha_estimate(self, n: int) -> float:
        return self.own_alphas[n]


class EbriQAgent(_RateEstimator):
    """Better-reply-with-inertia over estimated utilities, plus rate learning.

    Per period (after the initial round, which proposes uniformly at random):

    * with probability ``epsilon(t)`` pick a uniform target; announce the
      current bargained-allocation estimate with probability ``zeta``,
      otherwise the oversized exploration allocation that always wins;
    * otherwise repeat the previous action with probability ``xi``, else move
      to a uniformly drawn action whose estimated utility, averaged over the
      remembered joint selections, strictly beats the previous action's
      (staying put when none does).

    Updates: the chosen pair's rate estimate and implied allocation, the
    other CUs' announced allocations (exploration announcements are skipped),
    and the selection memory.
    """

    __slots__ = ("params", "bias", "announced_alphas", "memory", "last_action",
                 "_exponent", "_alpha_explore")

    def __init__(self, index: int, num_cus: int, num_d2d: int, direct_rate: float,
                 sys: SystemParams, params: LearningParams, bias: Sequence[float]):
        super().__init__(index, num_cus, num_d2d, direct_rate, sys)
        self.params = params
        self.bias = tuple(bias)
        self.announced_alphas = [[sys.alpha_low] * num_d2d for _ in range(num_cus)]
        self.memory = deque(maxlen=params.memory_length)
        self.last_action = None
        self._exponent = -1.0 / (num_cus * params.memory_length)
        self._alpha_explore = sys.alpha_explore

    def act(self, t: int, rng) -> Proposal:
        num_d2d = self.num_d2d
        if t <= 1:
            target = int(rng.random() * num_d2d)
            return Proposal(target, self.own_alphas[target])
        params = self.params
        if rng.random() < params.epsilon0 * t**self._exponent:
            target = int(rng.random() * num_d2d)
            if rng.random() < params.zeta:
                return Proposal(target, self.own_alphas[target])
            return Proposal(target, self._alpha_explore)
        if rng.random() < params.xi or not self.memory:
            return self._proposal_for(self.last_action)
        better = self._better_replies()
        if not better:
            return self._proposal_for(self.last_action)
        return self._proposal_for(better[int(rng.random() * len(better))])

    def _proposal_for(self, action) -> Proposal:
        if action is None:
            return PASS
        return Proposal(action, self.own_alphas[action])

    def _better_replies(self) -> list:
        """Actions whose memory-summed estimated utility beats the last action's."""
        scores = self._memory_scores()
        base = 0.0 if self.last_action is None else scores[self.last_action]
        better = [n for n in range(self.num_d2d) if scores[n] > base]
        if self.last_action is not None and 0.0 > base:
            better.append(None)
        return better

    def _memory_scores(self) -> list:
        """Summed estimated utility of targeting each pair, over the memory."""
        me = self.index
        theta = self.sys.theta
        bias = self.bias
        announced = self.announced_alphas
        own_alphas = self.own_alphas
        my_bias = bias[me]
        win_value = [
            (1.0 - own_alphas[n]) * self.rate_estimates[n] - self.direct_rate - theta
            for n in range(self.num_d2d)
        ]
        scores = [0.0] * self.num_d2d
        for entry in self.memory:
            opp_best = [_NEG_INF] * self.num_d2d
            opp_who = [-1] * self.num_d2d
            for m2, n2 in enumerate(entry):
                if n2 is not None and m2 != me:
                    bid = announced[m2][n2] + bias[m2]
                    if bid > opp_best[n2]:
                        opp_best[n2], opp_who[n2] = bid, m2
            for n in range(self.num_d2d):
                my_bid = own_alphas[n] + my_bias
                if my_bid > opp_best[n] or (my_bid == opp_best[n] and me < opp_who[n]):
                    scores[n] += win_value[n]
                else:
                    scores[n] -= theta
        return scores

    def estimated_utility(self, candidate, joint_selection) -> float:
        """Estimated payoff of taking ``candidate`` against one joint selection.

        ``joint_selection`` is a full length-M target tuple (as stored in the
        memory); this agent's own entry in it is ignored.
        """
        if candidate is None:
            return 0.0
        me = self.index
        my_bid = self.own_alphas[candidate] + self.bias[me]
        for m2, n2 in enumerate(joint_selection):
            if m2 != me and n2 == candidate:
                bid = self.announced_alphas[m2][candidate] + self.bias[m2]
                if bid > my_bid or (bid == my_bid and m2 < me):
                    return -self.sys.theta
        return (
            (1.0 - self.own_alphas[candidate]) * self.rate_estimates[candidate]
            - self.direct_rate
            - self.sys.theta
        )

    def update(self, obs: PeriodObservation, t: int) -> None:
        cooperated_with = self._check_observation(obs)
        if cooperated_with is not None:
            self.record_cooperation(cooperated_with, obs.own_rate_sample)
        alpha_explore = self._alpha_explore
        announced = self.announced_alphas
        me = self.index
        for m2, prop in enumerate(obs.proposals):
            if m2 != me and prop.target is not None and prop.alpha != alpha_explore:
                announced[m2][prop.target] = prop.alpha
        self.memory.append(tuple(p.target for p in obs.proposals))
        self.last_action = obs.proposals[me].target


class EpsilonGreedyAgent(_RateEstimator):
    """Classical epsilon-greedy over per-pair average realized payoff.

    Each pair is an arm; its value is the running mean of the realized
    per-period payoff earned when targeting it (cooperation gain minus the
    negotiation cost, or just the cost when rejected). With probability
    ``epsilon`` a uniform pair is targeted instead of the best arm. Proposals
    always announce the current bargained-allocation estimate, and the rate
    estimator is updated exactly like the main policy's.
    """

    __slots__ = ("epsilon", "q_values", "pull_counts")

    def __init__(self, index: int, num_cus: int, num_d2d: int, direct_rate: float,
                 sys: SystemParams, epsilon: float = 0.1):
        super().__init__(index, num_cus, num_d2d, direct_rate, sys)
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
        self.epsilon = epsilon
        # Common optimistic start so every arm gets tried.
        q0 = (1.0 - self.own_alphas[0]) * self.rate_estimates[0] - direct_rate - sys.theta
        self.q_values = [q0] * num_d2d
        self.pull_counts = [0] * num_d2d

    def act(self, t: int, rng) -> Proposal:
        if rng.random() < self.epsilon:
            target = int(rng.random() * self.num_d2d)
        else:
            q = self.q_values
            best = max(q)
            ties = [n for n in range(self.num_d2d) if q[n] == best]
            target = ties[int(rng.random() * len(ties))] if len(ties) > 1 else ties[0]
        return Proposal(target, self.own_alphas[target])

    def update(self, obs: PeriodObservation, t: int) -> None:
        cooperated_with = self._check_observation(obs)
        own = obs.proposals[self.index]
        if cooperated_with is not None:
            reward = (1.0 - own.alpha) * obs.own_rate_sample - self.direct_rate - self.sys.theta
            self.record_cooperation(cooperated_with, obs.own_rate_sample)
        else:
            reward = -self.sys.theta
        n = own.target
        self.pull_counts[n] += 1
        self.q_values[n] += (reward - self.q_values[n]) / self.pull_counts[n]


class RandomAgent:
    """Uniform target every period, always conceding the minimum allocation."""

    __slots__ = ("num_d2d", "alpha_low")

    def __init__(self, num_d2d: int, sys: SystemParams):
        self.num_d2d = num_d2d
        self.alpha_low = sys.alpha_low

    def act(self, t: int, rng) -> Proposal:
        return Proposal(int(rng.random() * self.num_d2d), self.alpha_low)

    def update(self, obs: PeriodObservation, t: int) -> None:
        pass

    def alpha_estimate(self, n: int) -> float:
        return self.alpha_low


class NonCoopAgent:
    """Never proposes; the CU always transmits on its own."""

    __slots__ = ()

    def act(self, t: int, rng) -> Proposal:
        return PASS

    def update(self, obs: PeriodObservation, t: int) -> None:
        pass

    def alpha_estimate(self, n: int) -> float:
        raise RuntimeError("non-cooperating CU has no allocation estimate")


class FixedProposalAgent:
    """Replays one fixed proposal forever (complete-information reference)."""

    __slots__ = ("proposal",)

    def __init__(self, target: Optional[int], alpha: Optional[float]):
        self.proposal = PASS if target is None else Proposal(target, alpha)

    def act(self, t: int, rng) -> Proposal:
        return self.proposal

    def update(self, obs: PeriodObservation, t: int) -> None:
        pass

    def alpha_estimate(self, n: int) -> float:
        return self.proposal.alpha
