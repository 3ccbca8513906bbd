"""Exception types shared across the package."""


class NestedPolarError(Exception):
    """Base class for errors raised by this package."""


class EnumerationBoundError(NestedPolarError):
    """Group order exceeds the exhaustive subgroup-enumeration bound."""


class InvalidSubgroupError(NestedPolarError):
    """Element set is not a subgroup of the stated group."""


class NestingError(NestedPolarError):
    """Operation requires K <= H and the subgroups do not nest."""


class SynthesisSizeError(NestedPolarError):
    """Exact synthesized-channel table would exceed the size bound."""


class CompositionError(NestedPolarError):
    """Channel composition with mismatched alphabets."""


class InconsistentEvidenceError(NestedPolarError):
    """Conditioning event has zero probability under the given likelihoods."""


class ConfigError(NestedPolarError):
    """Invalid experiment configuration."""


class ConstructionIOError(NestedPolarError):
    """Serialized construction is malformed, truncated, or mismatched."""
