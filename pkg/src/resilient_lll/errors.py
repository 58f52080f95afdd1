"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or out-of-range caller input."""


class CapacityError(RuntimeError):
    """Requested computation exceeds a configured enumeration bound.

    Callers catching this should fall back to an analytic route (e.g. the
    union-bound certificate) instead of silently subsampling.
    """


class ContractViolation(RuntimeError):
    """A guarantee the pipeline is supposed to maintain was observed broken."""


class ComponentFailure(RuntimeError):
    """A residual component could not be solved within its resampling cap."""


class ReductionViolation(RuntimeError):
    """A bucket produced by the edge-coloring reduction breaks its degree or
    palette guarantee."""
