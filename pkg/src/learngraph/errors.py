"""Exception hierarchy shared by all modules."""


class LearnGraphError(Exception):
    """Base class for every error raised by the package."""


class InputError(LearnGraphError, ValueError):
    """Malformed or inconsistent arguments."""


class ResourceCapError(LearnGraphError):
    """An enumeration or construction would exceed its configured cap."""


class InfeasibleError(LearnGraphError):
    """No valid flow exists for a positive input, or a flow uses a missing arc."""


class DegenerateInstanceError(LearnGraphError):
    """The root vertex is already accepting."""


class ConditioningError(LearnGraphError):
    """Conditioning onto a set that carries no flow."""


class TransportUnsoundError(LearnGraphError):
    """Weights are not constant on the classes a symmetry moves flow between."""


class ConstructionError(LearnGraphError):
    """A learning-graph construction cannot produce a valid flow."""


class SamplerError(LearnGraphError):
    """A Monte Carlo sampler rejected too many draws."""
