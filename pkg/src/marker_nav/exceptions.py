"""Exception types raised by the estimation and simulation layers."""


class MarkerNavError(Exception):
    """Base class for all package errors."""


class BehindCamera(MarkerNavError):
    """A point lies on or behind the image plane and cannot be imaged."""


class DegenerateConfiguration(MarkerNavError):
    """Three or more of the planar correspondences are collinear."""


class NoValidPose(MarkerNavError):
    """Neither planar pose candidate places the marker in front of the camera."""


class SingularInnovation(MarkerNavError):
    """The innovation covariance P + R cannot be inverted."""


class BothInvalid(MarkerNavError):
    """Both ambiguous candidates have infinite cost."""


class AtWaypoint(MarkerNavError):
    """The vehicle sits on the waypoint, so no bearing is defined."""


class ConfigError(MarkerNavError, ValueError):
    """A scenario configuration value is missing, unknown or out of range.

    ``key`` carries the dotted path of the offending entry.
    """

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
