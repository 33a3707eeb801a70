"""Exception types raised across the package."""


class HeadctlError(Exception):
    pass


class SingularSystem(HeadctlError):
    pass


class NotSymmetric(HeadctlError):
    pass


class NonFiniteDerivative(HeadctlError):
    pass


class NonDiagonal(HeadctlError):
    pass


class InsufficientHistory(HeadctlError):
    pass


class DimensionMismatch(HeadctlError):
    pass


class LengthMismatch(HeadctlError):
    pass


class Degenerate(HeadctlError):
    pass


class Empty(HeadctlError):
    pass


class GimbalLock(HeadctlError):
    pass


class FaceNotFound(HeadctlError):
    pass


class ConfigError(HeadctlError):
    pass
