"""
Exception hierarchy shared by the simulator packages.

The CLI maps these onto its exit codes: ConfigError -> 2, NumericalError -> 4,
FitWindowError -> 5.
"""


class SpinSimError(Exception):
    """Base class for every error raised by the simulator"""


class ConfigError(SpinSimError, ValueError):
    """Malformed configuration document, unknown key or violated invariant"""


class NumericalError(SpinSimError, ArithmeticError):
    """Base class for failures of the numerical machinery"""


class NonFiniteStateError(NumericalError):
    """A state vector or derivative picked up a NaN or an infinity"""


class StepSizeUnderflowError(NumericalError):
    """The step controller hit h_min with the error estimate still above 1"""

    def __init__(self, message: str, t: float = float("nan"), h: float = float("nan")):
        super().__init__(message)
        self.t = t
        self.h = h

    def __reduce__(self):
        return (type(self), (self.args[0], self.t, self.h))


class DegenerateSeparationError(NumericalError):
    """Two divergence trajectories coincide, so ln|dZ| is -inf"""


class TrialFailure(NumericalError):
    """An ensemble trial failed; carries the (angle, trial) it came from"""

    def __init__(self, message: str, angle_index: int, trial_index: int, mean_theta: float):
        super().__init__(
            f"trial {trial_index} at angle #{angle_index} "
            f"(mean_theta={mean_theta!r}) failed: {message}"
        )
        self.cause_message = message
        self.angle_index = angle_index
        self.trial_index = trial_index
        self.mean_theta = mean_theta

    def __reduce__(self):
        return (type(self), (self.cause_message, self.angle_index, self.trial_index, self.mean_theta))


class DegenerateChordError(SpinSimError, ValueError):
    """Two unit vectors coincide, so the spring direction is undefined"""


class FitWindowError(SpinSimError, ValueError):
    """Not enough usable samples to fit an exponential growth rate"""


class EmptySweepError(SpinSimError, ValueError):
    """Every angle of a sweep ended Unsettled, so no fraction is defined"""
