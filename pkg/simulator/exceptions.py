"""
Domain exceptions for the simulator.

Input problems are reported with django's ValidationError (see validators.py);
the classes here signal failures of the simulation itself.
"""


class ProtocolError(RuntimeError):
    """A protocol invariant was violated - a logic bug, never a user error."""


class ForbiddenBranch(ProtocolError):
    """A projection was requested onto a branch with (numerically) zero probability."""

    def __init__(self, probability, message=None):
        self.probability = probability
        super().__init__(message or f'Projection onto a forbidden branch (probability {probability:.3e})')


class CalibrationError(RuntimeError):
    """The exhaustive gate-sequence search found no passing candidate."""

    def __init__(self, message, best_candidate=None, best_score=None):
        self.best_candidate = best_candidate
        self.best_score = best_score
        super().__init__(f'{message} (best candidate: {best_candidate}, score {best_score})')
