"""The proposal game between CUs over D2D pairs.

Each CU either opts out or targets one D2D pair, implicitly offering the
bargained time allocation; each pair picks the proposer offering the most
time, with a small per-CU bias so its choice is always unique. A CU pays a
small negotiation cost for any proposal, so at equilibrium only worthwhile
cooperations survive. Pure Nash equilibria of this game induce exactly the
stable matchings, and from any profile some sequence of single-CU strict
improvements reaches one; ``better_reply_path`` constructs such a sequence.
"""

from __future__ import annotations

import random as _random
from dataclasses import dataclass
from itertools import product
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import CapacityError, ConfigurationError
from .matching import Matching, PreferenceProfile, count_matchings
from .params import SystemParams

__all__ = [
    "Proposal",
    "TieBreakRule",
    "d2d_choice",
    "choice_winners",
    "game_utility",
    "induced_matching",
    "enumerate_pne",
    "better_reply_path",
    "check_negotiation_cost",
]

class Proposal(NamedTuple):
    """One CU's announcement: a target pair and the offered allocation.

    ``alpha`` is None exactly when ``target`` is None (the CU opted out).
    """

    target: Optional[int]
    alpha: Optional[float]


PASS = Proposal(None, None)


@dataclass(frozen=True)
class TieBreakRule:
    """Per-CU biases added to offered allocations when a pair chooses.

    Biases are small enough that they never overturn a strict allocation
    difference present in the instance, and all distinct so exact ties are
    resolved deterministically.
    """

    bias: tuple

    @classmethod
    def for_instance(cls, prefs: PreferenceProfile, seed: int = 0) -> "TieBreakRule":
        """Build biases from half the smallest gap between distinct allocations.

        Bias magnitudes are ordered by a seeded random permutation of the CUs
        and scaled down by the number of CUs so the largest pairwise bias
        difference stays below the smallest allocation gap.
        """
        num_cus = prefs.num_cus
        values = np.unique(prefs.d2d_scores)
        gaps = np.diff(values)
        kappa = float(gaps.min()) / 2.0 if gaps.size else 1e-12
        order = _random.Random(seed).sample(range(num_cus), num_cus)
        bias = [0.0] * num_cus
        for rank, m in enumerate(order):
            bias[m] = kappa * (num_cus - rank) / num_cus
        return cls(tuple(bias))

    def preserves_order(self, prefs: PreferenceProfile) -> bool:
        """Check the defining condition on every same-pair CU comparison."""
        for n in range(prefs.num_d2d):
            col = prefs.d2d_scores[:, n]
            for m in range(prefs.num_cus):
                for m2 in range(prefs.num_cus):
                    if col[m] > col[m2] and col[m] + self.bias[m] <= col[m2] + self.bias[m2]:
                        return False
        return True


def d2d_choice(n: int, proposals: Sequence[Proposal], rule: TieBreakRule) -> Optional[int]:
    """The CU pair ``n`` picks: highest offered allocation plus bias, or None."""
    best, best_bid = None, None
    for m, prop in enumerate(proposals):
        if prop.target == n:
            bid = prop.alpha + rule.bias[m]
            if best is None or bid > best_bid:
                best, best_bid = m, bid
    return best


def choice_winners(proposals: Sequence[Proposal], rule: TieBreakRule,
                   num_d2d: int) -> list:
    """Every pair's choice in one pass; index n holds the chosen CU or None."""
    winners = [None] * num_d2d
    bids = [None] * num_d2d
    bias = rule.bias
    for m, prop in enumerate(proposals):
        n = prop.target
        if n is not None:
            bid = prop.alpha + bias[m]
            if winners[n] is None or bid > bids[n]:
                winners[n], bids[n] = m, bid
    return winners


def _profile_winners(profile, prefs: PreferenceProfile, rule: TieBreakRule) -> list:
    winners = [None] * prefs.num_d2d
    bids = [None] * prefs.num_d2d
    for m, n in enumerate(profile):
        if n is not None:
            bid = prefs.d2d_scores[m, n] + rule.bias[m]
            if winners[n] is None or bid > bids[n]:
                winners[n], bids[n] = m, bid
    return winners


def _utilities(profile, winners, prefs: PreferenceProfile, theta: float) -> list:
    utils = []
    for m, n in enumerate(profile):
        if n is None:
            utils.append(0.0)
        elif winners[n] == m:
            utils.append(prefs.cu_scores[m, n] - theta)
        else:
            utils.append(-theta)
    return utils


def game_utility(m: int, profile, prefs: PreferenceProfile, sys: SystemParams,
                 rule: TieBreakRule) -> float:
    """Payoff of CU ``m`` under the joint action ``profile``.

    Opting out pays 0; a proposal pays the CU's bargained-cooperation score
    minus the negotiation cost if the target picks it, and minus the cost
    alone if the target picks someone else.
    """
    n = profile[m]
    if n is None:
        return 0.0
    winners = _profile_winners(profile, prefs, rule)
    if winners[n] == m:
        return float(prefs.cu_scores[m, n]) - sys.theta
    return -sys.theta


def induced_matching(profile, prefs: PreferenceProfile, sys: SystemParams,
                     rule: TieBreakRule) -> Matching:
    """The matching realized when every pair picks among the profile's proposals."""
    winners = _profile_winners(profile, prefs, rule)
    cu_partner = [None] * prefs.num_cus
    for n, m in enumerate(winners):
        if m is not None:
            cu_partner[m] = n
    return Matching.from_cu_partners(cu_partner, prefs.num_d2d)


def _wins_deviation(m: int, target: int, profile, prefs, rule) -> bool:
    """Would pair ``target`` pick CU ``m`` if it deviated there unilaterally?"""
    bid = prefs.d2d_scores[m, target] + rule.bias[m]
    for m2, n2 in enumerate(profile):
        if m2 != m and n2 == target:
            other = prefs.d2d_scores[m2, target] + rule.bias[m2]
            if other > bid or (other == bid and m2 < m):
                return False
    return True


def _improving_deviations(profile, utils, prefs, sys, rule):
    """All (cu, action) unilateral moves that strictly raise that CU's payoff."""
    moves = []
    for m, current in enumerate(profile):
        if current is not None and 0.0 > utils[m]:
            moves.append((m, None))
        for n in range(prefs.num_d2d):
            if n == current:
                continue
            if _wins_deviation(m, n, profile, prefs, rule):
                payoff = float(prefs.cu_scores[m, n]) - sys.theta
            else:
                payoff = -sys.theta
            if payoff > utils[m]:
                moves.append((m, n))
    return moves


def check_negotiation_cost(prefs: PreferenceProfile, sys: SystemParams) -> None:
    """Ensure the negotiation cost cannot flip any positive cooperation score.

    The equilibrium/stability equivalence needs theta strictly below every
    positive CU score of the instance.
    """
    positive = prefs.cu_scores[prefs.cu_scores > 0]
    if positive.size and positive.min() <= sys.theta:
        raise ConfigurationError(
            f"theta (={sys.theta}) must be < the smallest positive CU score "
            f"(={positive.min():.3g}) for equilibria to coincide with stable matchings"
        )


def enumerate_pne(prefs: PreferenceProfile, sys: SystemParams,
                  rule: TieBreakRule | None = None):
    """Brute-force all pure Nash equilibria of a small instance."""
    num_profiles = (prefs.num_d2d + 1) ** prefs.num_cus
    if num_profiles > 10**6:
        raise CapacityError(
            f"instance too large to enumerate: (N+1)^M = {num_profiles} > 1e6"
        )
    if rule is None:
        rule = TieBreakRule.for_instance(prefs)
    check_negotiation_cost(prefs, sys)
    actions = (None, *range(prefs.num_d2d))
    equilibria = []
    for profile in product(actions, repeat=prefs.num_cus):
        winners = _profile_winners(profile, prefs, rule)
        utils = _utilities(profile, winners, prefs, sys.theta)
        if _is_pne(profile, utils, prefs, sys, rule):
            equilibria.append(profile)
    return equilibria


def _is_pne(profile, utils, prefs, sys, rule) -> bool:
    theta = sys.theta
    for m, current in enumerate(profile):
        best = utils[m]
        if current is not None and 0.0 > best:
            return False  # opting out would improve
        for n in range(prefs.num_d2d):
            if n == current:
                continue
            gain = prefs.cu_scores[m, n] - theta
            if gain > best and _wins_deviation(m, n, profile, prefs, rule):
                return False
    return True


def better_reply_path(start, prefs: PreferenceProfile, sys: SystemParams,
                      rule: TieBreakRule | None = None, seed: int = 0):
    """A strict-improvement path from ``start`` to an equilibrium profile.

    Every step changes one CU's action and strictly raises that CU's payoff.
    Construction: CUs with a negative payoff (rejected, or proposing an
    unacceptable pair) opt out first; then one mutually improving proposal is
    granted at a time, with the newly displaced CU opting out before the
    next. Improving moves are taken in index order until a profile repeats,
    after which they are drawn uniformly (a random satisfaction order reaches
    an equilibrium with probability one). A step budget of
    M*(N+1)*count_matchings guards against nontermination.
    """
    if rule is None:
        rule = TieBreakRule.for_instance(prefs, seed=seed)
    check_negotiation_cost(prefs, sys)
    rng = _random.Random(seed)
    profile = tuple(start)
    for action in profile:
        if action is not None and not 0 <= action < prefs.num_d2d:
            raise ValueError(f"action {action!r} is not a pair id or None")
    path = [profile]
    cap = prefs.num_cus * (prefs.num_d2d + 1) * count_matchings(prefs.num_cus, prefs.num_d2d)
    seen = {profile}
    randomized = False
    for _ in range(cap):
        winners = _profile_winners(profile, prefs, rule)
        utils = _utilities(profile, winners, prefs, sys.theta)
        opt_outs = [(m, None) for m in range(prefs.num_cus)
                    if profile[m] is not None and utils[m] < 0.0]
        if opt_outs:
            move = opt_outs[0]
        else:
            moves = _improving_deviations(profile, utils, prefs, sys, rule)
            if not moves:
                return path  # no better reply anywhere: a pure Nash equilibrium
            move = rng.choice(moves) if randomized else moves[0]
        m, action = move
        new_profile = profile[:m] + (action,) + profile[m + 1:]
        new_util = game_utility(m, new_profile, prefs, sys, rule)
        assert new_util > utils[m], "better-reply step failed to improve"
        profile = new_profile
        path.append(profile)
        if profile in seen:
            randomized = True
        seen.add(profile)
    raise RuntimeError(
        f"better-reply path exceeded its step budget ({cap}); instance may "
        "violate the tie-break or negotiation-cost preconditions"
    )
