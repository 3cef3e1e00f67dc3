"""Shared exception types."""


class ResourceCeilingError(ValueError):
    """A requested problem size exceeds a configured resource ceiling.

    Raised instead of attempting a computation whose memory or big-integer
    cost would be unreasonable (exact chains above the arithmetic ceiling,
    direct-sampler function tables above the memory ceiling).
    """
