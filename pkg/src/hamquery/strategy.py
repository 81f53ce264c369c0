"""The five-phase strategy end to end."""

from dataclasses import dataclass, field

import numpy as np

from .cycle import audit_red_cycle
from .errors import ContractError, PhaseFailure
from .oracle import Oracle
from .params import ParamSet
from .phase1_dfs import run_phase1
from .phase2_partition import run_phase2
from .phase3_tiny import PhaseContext, run_phase3
from .phase4_small import run_phase4
from .phase5_boost import run_phase5
from .tricolor import ColorState
from .verify import Certificate


@dataclass
class StrategyResult:
    certificate: Certificate
    telemetry: dict = field(default_factory=dict)


def _check_degree(s: ColorState, params: ParamSet, phase: int) -> None:
    # the red graph never has a vertex of huge degree (whp); a violation
    # means the instance is atypical, so the attempt is abandoned
    if not params.check_events:
        return
    top = max((len(a) for a in s.red_adj), default=0)
    if top > params.max_red_degree:
        raise PhaseFailure(phase, "N1", f"red degree {top} > {params.max_red_degree:.1f}")


def five_phase_strategy(o: Oracle, params: ParamSet, alg_seed: int = 0,
                        audit: bool = False) -> StrategyResult:
    """Find a red Hamilton cycle or raise PhaseFailure.

    When p exceeds ``params.p_cap`` the strategy runs at p_cap: every exposure
    is thinned by a keyed coin, and thinned pairs are never sent to the oracle.
    """
    p_eff = params.p_cap if o.p > params.p_cap else None
    s = ColorState(o, alg_seed, p_eff=p_eff)
    marks = [o.stats().positives]
    tel: dict = {"p_eff": s.p}

    def mark(phase):
        _check_degree(s, params, phase)
        marks.append(o.stats().positives)

    dfs, p1 = run_phase1(s, params)
    tel["phase1"] = p1.telemetry
    mark(1)
    part = run_phase2(s, p1.cycle, p1.U, params)
    tel["phase2"] = part.telemetry
    mark(2)
    ctx = PhaseContext.from_partition(s, params, p1.cycle, part, audit=audit)
    run_phase3(ctx)
    mark(3)
    run_phase4(ctx)
    mark(4)
    cycle = run_phase5(ctx)
    mark(5)
    tel.update(ctx.telemetry)
    if len(cycle) != o.n or len(set(cycle)) != o.n:
        raise ContractError("assembled cycle does not span the vertex set")
    why = audit_red_cycle(s, cycle)
    if why is not None:
        raise ContractError(f"assembled cycle: {why}")
    per_phase = {f"phase{i}": int(marks[i] - marks[i - 1]) for i in range(1, 6)}
    cert = Certificate([int(v) for v in cycle], per_phase, "five-phase")
    return StrategyResult(cert, tel)
