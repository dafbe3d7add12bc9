"""
Exception hierarchy for thinprobe.

Library code raises these; only the command line layer turns them into
process exit codes (``exit_code`` attribute).
"""


class ThinProbeError(Exception):
    """Base class for every error raised by thinprobe."""

    exit_code = 1


class ConfigurationError(ThinProbeError):
    """Scenario, schema or settings problem."""


class GeometryError(ThinProbeError):
    """Invalid curve, frame, subdomain or node request."""


class CgoError(ThinProbeError):
    """CGO parameter contract violation."""


class CgoOverflowError(CgoError):
    """Exponent argument of a probe solution above the overflow limit."""


class ScheduleError(CgoError):
    """The s = eps^(-beta) schedule cannot be built for these inputs."""


class ModelError(ThinProbeError):
    """Registry, rotation, manufactured pair or RDC mapping problem."""


class SolverError(ThinProbeError):
    """Forward solver failure.

    ``step`` and ``node`` locate the failure when known.
    """

    def __init__(self, message, step=None, node=None):
        details = []
        if step is not None:
            details.append(f"step {step}")
        if node is not None:
            details.append(f"node {node}")
        if details:
            message = f"{message} ({', '.join(details)})"
        super().__init__(message)
        self.step = step
        self.node = node


class CflError(SolverError):
    """Time step above the stability bound."""


class RootFindError(SolverError):
    """Nodewise inversion of H did not converge."""


class NonFiniteError(SolverError):
    """NaN or infinity in the discrete solution."""


class IdentityError(ThinProbeError):
    """Integral identity evaluation contract violation."""


class SweepError(ThinProbeError):
    """Sweep or slope fit cannot be completed."""


class HypothesisError(ThinProbeError):
    """A theorem hypothesis failed validation; the check was aborted."""


class ReportError(ThinProbeError):
    """Missing or corrupt run artifacts."""


class CheckFailed(ThinProbeError):
    """At least one experiment verdict is FAIL."""

    exit_code = 2
