"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A scenario config is malformed or violates a standing assumption."""


class SignalCorruptionError(RuntimeError):
    """A measured signal contains NaN or infinity."""


class DivergenceError(RuntimeError):
    """The closed loop left the representable range.

    Carries the step index at which the abort triggered and, when raised
    from the simulation loop, the partial run collected up to that step.
    """

    def __init__(self, step, message=None, result=None):
        self.step = step
        self.result = result
        super().__init__(message or f"state diverged at step {step}")
