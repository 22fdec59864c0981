"""Entanglement router: disjoint node pairs joined simultaneously."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

from ..errors import ExclusivityError
from ..model import ChainSpec
from ..solver import SolverConfig
from .quench import OptimizationResult, default_jm_grid, optimize_jm


@dataclass
class RouterPlan:
    """Named nodes (one chain each) and the pairs the dispatcher connects.

    ``j_m`` maps a pair to either a fixed junction coupling or a grid to
    optimize over; pairs without an entry use the default grid.
    """

    nodes: dict[str, ChainSpec]
    pairs: list[tuple[str, str]]
    j_m: dict[tuple[str, str], float | Sequence[float]] = field(default_factory=dict)

    def validate(self) -> None:
        seen = set()
        for a, b in self.pairs:
            for name in (a, b):
                if name not in self.nodes:
                    raise KeyError(f"unknown node {name!r}")
            if a == b:
                raise ExclusivityError(a)
            for name in (a, b):
                if name in seen:
                    raise ExclusivityError(name)
                seen.add(name)

    def grid_for(self, pair: tuple[str, str]) -> list[float]:
        spec = self.j_m.get(pair, None)
        if spec is None:
            return [float(x) for x in default_jm_grid()]
        if isinstance(spec, (int, float)):
            return [float(spec)]
        return [float(x) for x in spec]


def route(plan: RouterPlan, t_max: float, cfg: SolverConfig = SolverConfig(), *,
          workers: int = 1) -> dict[tuple[str, str], OptimizationResult]:
    """Simulate every pair of the plan as an independent composite chain.

    The first node of a pair is the left chain.  Pairs do not interact.
    """
    plan.validate()
    return {
        (a, b): optimize_jm(plan.nodes[a], plan.nodes[b], plan.grid_for((a, b)), t_max, cfg,
                            workers=workers)
        for a, b in plan.pairs
    }
