"""Exception hierarchy. CLI exit codes key off the two top-level families."""


class FlowNetError(Exception):
    pass


class InputError(FlowNetError):
    """Bad files or an invalid network/demand description (exit code 2)."""


class ParseError(InputError):
    pass


class ValidationError(InputError):
    def __init__(self, report, context=""):
        self.report = report
        msg = "; ".join(str(v) for v in report.violations)
        super().__init__(f"{context}: {msg}" if context else msg)


class SolverError(FlowNetError):
    """Numerical failure or a violated analytical hypothesis (exit code 3)."""


class SingularSystem(SolverError):
    pass


class SingularSubsystem(SingularSystem):
    pass


class SolverStall(SolverError):
    pass


class LPUnbounded(SolverError):
    pass


class NodeInfeasible(SolverError):
    pass


class NotInterior(SolverError):
    pass


class Unstable(SolverError):
    pass
