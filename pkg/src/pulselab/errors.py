"""Exception types shared across the package."""


class PulselabError(Exception):
    """Base class for all package-specific failures."""


class BlowUpError(PulselabError):
    """Non-finite field values encountered during time stepping."""

    def __init__(self, step, t=None):
        self.step = step
        self.t = t
        msg = f"non-finite field values at step {step}"
        if t is not None:
            msg += f" (t = {t:g})"
        super().__init__(msg)


class NoPulseError(PulselabError):
    """Newton iteration for the traveling-wave problem did not converge."""

    def __init__(self, residual, iterations):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"no pulse found: residual {residual:.3e} after {iterations} Newton steps"
        )


class DegeneratePulseError(PulselabError):
    """Singular Newton Jacobian beyond the translational zero mode."""


class IllConditionedNullspaceError(PulselabError):
    """Adjoint nullspace not separated from the rest of the spectrum."""


class OffManifoldError(PulselabError):
    """State does not resemble any translate of the pulse profile."""


class LeftBasinError(PulselabError):
    """State left the tube around the pulse family during relaxation."""


class DegenerateGeneratorError(PulselabError):
    """Stationary Fokker-Planck operator has nullspace dimension != 1."""


class PositivityError(PulselabError):
    """Computed stationary density is not strictly positive (under-resolved)."""


class ConfigError(PulselabError):
    """Experiment configuration failed validation."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"config field '{field}': {message}")
