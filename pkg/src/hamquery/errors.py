"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Raised for out-of-range inputs (n < 1, p outside [0, 1], bad pairs)."""


class RepeatedQuery(RuntimeError):
    """A pair was sent to the oracle a second time."""


class IllegalRecolour(RuntimeError):
    """Attempt to recolour a pair that is not white."""


class ContractError(RuntimeError):
    """A documented precondition of a routine does not hold."""


class MatchingInfeasible(RuntimeError):
    """No star matching with the requested multiplicity exists."""


class PhaseFailure(RuntimeError):
    """A phase of the five-phase strategy could not complete.

    ``phase`` is 1..5 and ``reason`` is a short machine-readable tag.
    """

    def __init__(self, phase: int, reason: str, detail: str = ""):
        self.phase = phase
        self.reason = reason
        self.detail = detail
        msg = f"phase {phase}: {reason}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class StrategyFailure(RuntimeError):
    """An alternative strategy gave up (e.g. too few successes in a list)."""

    def __init__(self, stage: str, reason: str):
        self.stage = stage
        self.reason = reason
        super().__init__(f"{stage}: {reason}")
