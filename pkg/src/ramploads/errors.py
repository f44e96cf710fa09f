"""Exception types raised by the ramploads package."""


class RampLoadsError(Exception):
    """Base class for all package errors."""


class DomainError(RampLoadsError):
    """An argument lies outside the valid domain (x, s, angle, parameter range)."""


class NonMonotoneProfile(RampLoadsError):
    """The ramp height decreases somewhere; b'(x) < 0 detected at a quadrature node."""


class LayerUndefined(RampLoadsError):
    """No concentration layer forms: the ramp height is identically zero near the tip."""


class InvalidExponent(RampLoadsError):
    """Velocity-power friction exponent is below 1."""


class StartFailure(RampLoadsError):
    """The ODE integrator cannot start: b(s0) = 0 at the chosen startup station."""


class OutOfValidityRange(RampLoadsError):
    """A station was requested beyond the validity horizon s_valid."""


class DegenerateStation(RampLoadsError):
    """b(s) = 0 at a requested station with s > 0 (flat initial segment)."""


class UnsortedStations(RampLoadsError):
    """Station list is not strictly increasing in arc length."""


class StepTooLarge(RampLoadsError):
    """Accretion step rotated the tangent past the stability limit of the projection."""


class SupportOutsideDomain(RampLoadsError):
    """Test-function support does not intersect the gas region (or the charted arc)."""
