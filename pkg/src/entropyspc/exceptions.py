"""Exception hierarchy. Everything raised by this package derives from EntropySpcError."""


class EntropySpcError(Exception):
    """Base class for all entropyspc errors."""


class MalformedCsvError(EntropySpcError):
    """CSV input has a bad header, wrong row arity, or an unparseable value."""


class InconsistentDesignError(EntropySpcError):
    """The x design vector differs between samples of one dataset."""


class EmptyDatasetError(EntropySpcError):
    """No data rows were found."""


class UnknownSampleError(EntropySpcError, KeyError):
    """Requested sample_id is not present in the dataset."""


class DegenerateDesignError(EntropySpcError):
    """All design points are identical; the slope is unidentifiable."""


class InfeasibleError(EntropySpcError):
    """No density on the given support can satisfy the moment targets."""


class NoConvergenceError(EntropySpcError):
    """The dual solver exhausted its iteration budget while still progressing."""


class DivergentIntegralError(EntropySpcError):
    """The exponent is not integrable on the support for the given multipliers."""


class QuadratureError(EntropySpcError):
    """Quadrature refinement failed to stabilise the normalisation integral."""


class ZeroVarianceError(EntropySpcError):
    """The fitted density has (numerically) zero x variance."""


class SingularCovarianceError(EntropySpcError):
    """Coefficient covariance matrix is singular or nearly so."""


class TooFewSamplesError(EntropySpcError):
    """Fewer samples than the operation requires."""


class InvalidDofError(EntropySpcError, ValueError):
    """Degrees of freedom or alpha outside the valid range."""


class EmptyInputError(EntropySpcError, ValueError):
    """An operation received an empty collection."""


class BaselineMismatchError(EntropySpcError):
    """Monitoring data is incompatible with the stored baseline (design differs)."""
