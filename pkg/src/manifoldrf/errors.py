"""Exception types shared across the package."""


class DuplicatePointError(ValueError):
    """Two input points coincide, producing a zero-length nearest-neighbor edge."""


class IsolatedNodeError(ValueError):
    """A node has zero (weighted) degree where positive degree is required."""


class GridContractError(ValueError):
    """An operation that requires a wrap-around grid graph received something else."""


class WalkerStuckError(ValueError):
    """A random walk started from a node with no neighbors."""


class SeriesDivergenceError(RuntimeError):
    """Power-series kernel evaluation did not converge within the coefficient budget."""


class DeconvolutionError(ValueError):
    """Modulation-function deconvolution is undefined (leading coefficient <= 0)."""


class DatasetEmptyError(ValueError):
    """Training-set construction filtered out every candidate sample."""


class DivergenceError(RuntimeError):
    """Training loss became non-finite."""

    def __init__(self, epoch, message=None):
        self.epoch = epoch
        super().__init__(message or f"non-finite loss at epoch {epoch}")


class AlignmentError(ValueError):
    """Frobenius alignment is undefined for an all-zero estimate."""


class MaskError(ValueError):
    """A field mask left no observed entries."""
