"""Exception hierarchy.

Every error raised for a mathematically meaningful reason (a singular
boundary system, an irregular operator, a radius too close to the spectrum)
derives from :class:`DomainError`; the CLI maps those to exit status 2.
"""


class EquiconvError(Exception):
    """Base class for all package errors."""


class DomainError(EquiconvError):
    """An input is mathematically inadmissible for the requested operation."""

    code = "DomainError"

    def to_json(self):
        return {"error": self.code, "message": str(self)}


class RankDeficient(DomainError):
    code = "RankDeficient"


class NotSmooth(DomainError):
    code = "NotSmooth"


class ToleranceNotMet(DomainError):
    code = "ToleranceNotMet"


class NotRegular(DomainError):
    code = "NotRegular"


class StepFailure(DomainError):
    code = "StepFailure"


class CapExceeded(DomainError):
    code = "CapExceeded"


class NearPole(DomainError):
    code = "NearPole"


class WindingMismatch(DomainError):
    code = "WindingMismatch"


class NoSeparatingAlpha(DomainError):
    code = "NoSeparatingAlpha"


class ClusterTooTight(DomainError):
    code = "ClusterTooTight"


class DegenerateGeometry(DomainError):
    code = "DegenerateGeometry"


class EndpointNotZero(DomainError):
    code = "EndpointNotZero"


class OrderMismatch(DomainError):
    code = "OrderMismatch"


class AdmissibilityFailed(DomainError):
    code = "AdmissibilityFailed"


class OracleMismatch(DomainError):
    code = "OracleMismatch"


class ResolutionTooCoarse(DomainError):
    code = "ResolutionTooCoarse"


class ConfigInvalid(DomainError):
    code = "ConfigInvalid"
