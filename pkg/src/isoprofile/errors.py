"""Exceptions raised when a hypothesis of a bound or a search precondition fails."""


class HypothesisViolation(Exception):
    """Base class for violated hypotheses of a transfer bound or exact profile."""


class GrowthConditionViolated(HypothesisViolation):
    """alpha(r) >= delta0 * kappa * r**2 fails for some r >= r0, or delta0 <= 1/2."""


class LogConcavityRequired(HypothesisViolation):
    """The density is not log-concave, so half-line extremality cannot be used."""


class InfeasibleMass(ValueError):
    """No interval configuration on the grid reaches the requested mass."""
