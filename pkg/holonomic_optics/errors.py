"""
Exception hierarchy shared by every module of the package.

Each class carries the process exit code the command-line front end reports
when the error escapes a sub-command:

    0 ok, 1 verification failure, 2 input error,
    3 numerical failure, 4 solver failure
"""


class Error(Exception):
    """Base class for exceptions in this module."""

    exit_code = 1


class InputError(Error):
    exit_code = 2


class DimensionError(InputError):
    pass


class DuplicateCouplingError(InputError):
    pass


class RankDeficiencyError(InputError):
    """Gram-Schmidt met a row that is linearly dependent on its predecessors."""

    def __init__(self, row, norm):
        self.row = row
        self.norm = norm
        super().__init__(
            "Rank-deficient frame: row {} has residual norm {:.3e}".format(row, norm)
        )


class SectorSizeError(InputError):
    def __init__(self, size, limit):
        self.size = size
        self.limit = limit
        super().__init__(
            "Fock sector of {} states exceeds the configured limit {}".format(
                size, limit
            )
        )


class NonUnitaryError(InputError):
    def __init__(self, defect, tol):
        self.defect = defect
        super().__init__(
            "Matrix is not unitary: defect {:.3e} > {:.1e}".format(defect, tol)
        )


class ScheduleError(InputError):
    pass


class NumericalError(Error):
    exit_code = 3


class ConvergenceError(NumericalError):
    def __init__(self, estimate, refinements):
        self.estimate = estimate
        self.refinements = refinements
        super().__init__(
            "Path-ordered exponential did not converge after {} refinements "
            "(last estimate {:.3e})".format(refinements, estimate)
        )


class LevelCrossingError(NumericalError):
    def __init__(self, gap):
        self.gap = gap
        super().__init__("Level crossing: spectral gap collapsed to {:.3e}".format(gap))


class CutoffError(NumericalError):
    def __init__(self, disagreement, cutoff):
        self.disagreement = disagreement
        self.cutoff = cutoff
        super().__init__(
            "Cutoff {} insufficient: doubling changes the result by {:.3e}".format(
                cutoff, disagreement
            )
        )


class SolverError(Error):
    exit_code = 4

    def __init__(self, message, residual):
        self.residual = residual
        super().__init__("{} (best residual {:.3e})".format(message, residual))


class VerificationError(Error):
    exit_code = 1

    def __init__(self, failed):
        self.failed = failed
        super().__init__("Failed checks: {}".format(", ".join(failed)))


class DeltaConstraintError(NumericalError):
    def __init__(self, delta):
        self.delta = delta
        super().__init__(
            "delta constraint violated: pulse area {:.12f} != pi".format(delta)
        )
