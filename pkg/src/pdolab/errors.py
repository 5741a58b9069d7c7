"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or out-of-range input (non-finite values, bad shapes, s >= t, ...)."""


class CapabilityError(ValueError):
    """A requested derivative order or feature is beyond what an object supports."""


class DomainError(ValueError):
    """Evaluation at a point where the quantity is undefined (e.g. a singular derivative at 0)."""


class AdmissibilityError(InputError):
    """A weight exponent lies outside its Muckenhoupt admissibility range."""
