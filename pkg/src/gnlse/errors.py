"""Exception types shared across the package."""


class GnlseError(Exception):
    """Base class for all package errors."""


class DensityBelowFloor(GnlseError):
    def __init__(self, site, value, floor):
        self.site = site
        self.value = value
        self.floor = floor
        super().__init__(
            f"density {value:.3e} below floor {floor:.3e} at site {site}"
        )


class WindingDetected(GnlseError):
    """Phase carries nonzero winding around a lattice loop (vortex present)."""


class NonpositiveDensity(GnlseError):
    pass


class UnknownSlot(GnlseError):
    pass


class ConditionViolated(GnlseError):
    """Integrability condition fails: the generator gradient is not a gradient."""


class InversionUnavailable(GnlseError):
    """Matter-field route needs S([rho],[s],A) but sigma depends on S."""


class NonFiniteDetected(GnlseError):
    def __init__(self, step, site):
        self.step = step
        self.site = site
        super().__init__(f"non-finite value at step {step}, site {site}")


class StabilityViolation(GnlseError):
    pass


class SolverFailure(GnlseError):
    pass


class ConfigError(GnlseError):
    """Base for configuration problems."""


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    pass
