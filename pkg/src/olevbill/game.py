"""Two-player Cooperate/Deviate billing game between a vehicle (row) and a
charging plate (column): payoffs, best responses, pure Nash equilibria."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import product


class Strategy(str, Enum):
    C = "C"
    D = "D"


Profile = tuple[Strategy, Strategy]
ROW, COL = "row", "col"


@dataclass(frozen=True)
class PayoffMatrix:
    cells: dict  # (row strategy, col strategy) -> (row payoff, col payoff)

    def __post_init__(self):
        missing = [p for p in product(Strategy, Strategy) if p not in self.cells]
        if missing:
            raise ValueError(f"payoff matrix incomplete, missing {missing}")

    def value(self, profile: Profile, player: str) -> float:
        return self.cells[profile][0 if player == ROW else 1]

    def as_json(self) -> dict:
        return {f"{r.value}{c.value}": list(v) for (r, c), v in sorted(self.cells.items())}


TABLE2 = PayoffMatrix(
    {
        (Strategy.C, Strategy.C): (1, 1),
        (Strategy.C, Strategy.D): (1, 0),
        (Strategy.D, Strategy.C): (0, 1),
        (Strategy.D, Strategy.D): (-1, -1),
    }
)


@dataclass(frozen=True)
class PayoffParams:
    advantage: float
    cost: float


def payoff(params: PayoffParams) -> float:
    return params.advantage - params.cost


def best_response(matrix: PayoffMatrix, opponent: Strategy, player: str) -> frozenset[Strategy]:
    """Every strategy maximizing ``player``'s payoff against ``opponent``."""
    if player not in (ROW, COL):
        raise ValueError("player must be 'row' or 'col'")

    def value(own: Strategy) -> float:
        profile = (own, opponent) if player == ROW else (opponent, own)
        return matrix.value(profile, player)

    best = max(value(s) for s in Strategy)
    return frozenset(s for s in Strategy if value(s) == best)


def pure_nash(matrix: PayoffMatrix) -> set[Profile]:
    return {
        (r, c)
        for r, c in product(Strategy, Strategy)
        if r in best_response(matrix, c, ROW) and c in best_response(matrix, r, COL)
    }


def observed_profile(report: dict) -> Profile:
    b = report["behavior"]
    return (
        Strategy.D if b["obu_deviation_detected"] else Strategy.C,
        Strategy.D if b["plate_deviation_detected"] else Strategy.C,
    )


def empirical_payoff(report: dict, player: str) -> PayoffParams:
    """Map a finished run onto the game's payoff scale.

    advantage = charge success rate, zeroed for a player caught deviating
    (its charging or billing is no longer "normal"); cost = 1 only when
    both sides are caught, i.e. the dispute ends in revocation for both.
    Honest runs land on (1, 1) and one-sided deviations on (1, 0) / (0, 1).
    """
    b = report.get("behavior") or {}
    attempted = b.get("charges_attempted", 0)
    if attempted == 0:
        raise ValueError("report has no charging attempts")
    success = b["charges_delivered"] / attempted
    obu, cp = observed_profile(report)
    own, other = (obu, cp) if player == ROW else (cp, obu)
    dev_own = 1 if own is Strategy.D else 0
    dev_other = 1 if other is Strategy.D else 0
    return PayoffParams(success * (1 - dev_own), dev_own * dev_other)
