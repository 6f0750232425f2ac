class ShapeError(ValueError):
    """Array length or shape does not match the model."""


class NumericError(FloatingPointError):
    """A non-finite value reached the simulation or a weight update."""


class NotLabeledError(RuntimeError):
    """Classification requested before every neuron carries a class label."""


class InputError(ValueError):
    """Dataset slice or stream request cannot be satisfied."""


class IdxFormatError(ValueError):
    """Bad IDX magic number."""


class IdxLengthError(ValueError):
    """IDX payload shorter or longer than the header declares."""


class ConfigError(ValueError):
    """Invalid or unknown configuration key/value."""


class SnapshotError(ValueError):
    """Model snapshot cannot be parsed."""
