"""Exception types shared across the package."""


class QsphNetError(Exception):
    """Base class for all package errors."""


class CapacityError(QsphNetError):
    """Requested register size exceeds what the simulator supports."""


class UnsupportedGateError(QsphNetError):
    """Gate kind is not implemented."""


class ConfigurationError(QsphNetError):
    """Inconsistent circuit, model, or run configuration."""


class ShapeError(QsphNetError):
    """Array dimensions do not match the declared widths."""


class EncodingError(QsphNetError):
    """Feature vector cannot be encoded (e.g. zero amplitude norm)."""


class UndefinedLossError(QsphNetError):
    """Loss or relative metric is undefined for the given inputs."""


class TrainingDivergenceError(QsphNetError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class DegenerateStencilError(QsphNetError):
    """Correction matrix is singular for a particle stencil."""

    def __init__(self, message, particle=None):
        super().__init__(message)
        self.particle = particle


class EmptyDatasetError(QsphNetError):
    """No samples could be generated."""


class IntegrationError(QsphNetError):
    """Time integration produced non-finite field values."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step
