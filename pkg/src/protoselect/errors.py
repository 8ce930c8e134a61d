"""Exception hierarchy shared by all protoselect modules."""


class ProtoselectError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(ProtoselectError, ValueError):
    """Data violates an invariant (NaN values, bad labels, dim mismatch, ...)."""


class FormatError(ProtoselectError, ValueError):
    """A file does not conform to the EMB1 binary format or CSV schema."""


class ConfigurationError(ProtoselectError, ValueError):
    """A configuration is infeasible (M > N, impossible split fractions, ...)."""
