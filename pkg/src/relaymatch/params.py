"""Scalar parameter blocks for the network, the bargaining rules, and the learners.

Defaults follow the reference scenario used throughout the tests: a single
400 m cell, cell-edge cellular users (CUs), relay-capable D2D pairs between
150 and 250 m from the base station, and fourth-power path loss.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigurationError


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigurationError(message)


@dataclass(frozen=True)
class TopologyParams:
    """Geometry of one cell: node counts, placement annuli, path loss."""

    num_cus: int = 2
    num_d2d: int = 2
    cell_radius: float = 400.0
    cu_min_bs_distance: float = 300.0
    dt_bs_distance_range: tuple[float, float] = (150.0, 250.0)
    d2d_link_range: tuple[float, float] = (10.0, 60.0)
    path_loss_exponent: float = 4.0

    def __post_init__(self):
        _require(self.num_cus >= 1, f"num_cus (={self.num_cus}) must be >= 1")
        _require(self.num_d2d >= 1, f"num_d2d (={self.num_d2d}) must be >= 1")
        _require(
            0 < self.cu_min_bs_distance <= self.cell_radius,
            f"cu_min_bs_distance (={self.cu_min_bs_distance}) must be in (0, "
            f"cell_radius={self.cell_radius}]",
        )
        for name, (low, high) in (
            ("dt_bs_distance_range", self.dt_bs_distance_range),
            ("d2d_link_range", self.d2d_link_range),
        ):
            _require(0 < low <= high, f"{name} (={low}, {high}) must satisfy 0 < low <= high")
        _require(
            self.path_loss_exponent > 0,
            f"path_loss_exponent (={self.path_loss_exponent}) must be > 0",
        )


@dataclass(frozen=True)
class SystemParams:
    """Transmit powers, noise, and the bargaining-rule constants.

    Powers are in watts; the default noise power 1e-13 W is -100 dBm.
    ``alpha_low``/``alpha_high`` bound the D2D time allocation, ``theta`` is
    the per-proposal negotiation cost, and ``theta_prime`` is the margin added
    to ``alpha_high`` so that an exploring proposal always wins a relay's
    choice.
    """

    p_c: float = 0.02
    p_d: float = 0.02
    n_0: float = 1e-13
    alpha_low: float = 0.1
    alpha_high: float = 0.5
    theta: float = 1e-3
    theta_prime: float = 1e-3

    def __post_init__(self):
        _require(self.p_c > 0, f"p_c (={self.p_c}) must be > 0")
        _require(self.p_d > 0, f"p_d (={self.p_d}) must be > 0")
        _require(self.n_0 > 0, f"n_0 (={self.n_0}) must be > 0")
        _require(
            0 < self.alpha_low < self.alpha_high < 1,
            f"need 0 < alpha_low (={self.alpha_low}) < alpha_high (={self.alpha_high}) < 1",
        )
        _require(self.theta > 0, f"theta (={self.theta}) must be > 0")
        _require(self.theta_prime > 0, f"theta_prime (={self.theta_prime}) must be > 0")
        _require(
            self.alpha_high + self.theta_prime < 1,
            f"alpha_high + theta_prime (={self.alpha_high + self.theta_prime}) must be < 1",
        )

    @property
    def alpha_explore(self) -> float:
        """Time allocation announced by exploring proposals; beats any bargained one."""
        return self.alpha_high + self.theta_prime


@dataclass(frozen=True)
class LearningParams:
    """Knobs of the learning policies and the simulated horizon."""

    epsilon0: float = 0.1
    zeta: float = 0.1
    xi: float = 0.2
    memory_length: int = 4
    horizon: int = 10_000

    def __post_init__(self):
        for name in ("epsilon0", "zeta", "xi"):
            value = getattr(self, name)
            _require(0 < value < 1, f"{name} (={value}) must be in (0, 1)")
        _require(
            self.memory_length >= 1,
            f"memory_length (={self.memory_length}) must be >= 1",
        )
        _require(self.horizon >= 1, f"horizon (={self.horizon}) must be >= 1")
