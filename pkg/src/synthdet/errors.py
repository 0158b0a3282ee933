"""Exception types shared across the pipeline stages."""


class SynthdetError(Exception):
    """Base class for all pipeline errors."""


class MalformedHeader(SynthdetError):
    pass


class TruncatedData(SynthdetError):
    pass


class NonFiniteValue(SynthdetError):
    pass


class ZeroNormRow(SynthdetError):
    def __init__(self, row):
        self.row = row
        super().__init__(f"row {row} has zero Euclidean norm")


class DimMismatch(SynthdetError):
    pass


class ManifestInvalid(SynthdetError):
    pass


class PoolTooSmall(SynthdetError):
    pass


class DegenerateAffinity(SynthdetError):
    def __init__(self, rows):
        self.rows = list(rows)
        super().__init__(f"isolated points (affinity row sums ~0): {self.rows}")


class EmptyCluster(SynthdetError):
    pass


class EmptyMask(SynthdetError):
    pass


class BoxOutOfBounds(SynthdetError):
    pass


class PatchTooLarge(SynthdetError):
    pass


class MissingAsset(SynthdetError):
    pass


class EmptyBackgroundPool(SynthdetError):
    pass


class IndexOutOfRange(SynthdetError):
    pass


class AlignmentMismatch(SynthdetError):
    pass


class UnknownCategory(SynthdetError):
    pass


class NoDetections(SynthdetError):
    pass


class NoGroundTruth(SynthdetError):
    pass


class ConfigInvalid(SynthdetError):
    pass
