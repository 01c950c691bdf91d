"""Exception types shared across the toolchain."""


class GxuError(Exception):
    """Base class for all errors raised by this package."""


class SpecSyntaxError(GxuError):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", col {col}" if col is not None else "") + ")"
        super().__init__(message + where)


class PartitionError(GxuError):
    """An assumption mentions an output variable, or inputs/outputs overlap."""


class PatternError(GxuError):
    """A formula does not fit any of the supported rule patterns."""


class LengthError(GxuError):
    """A window does not match the monitor length."""


class GuardConflict(GxuError):
    """Zero or more than one transition enabled; the construction is broken."""


class OutputConflict(GxuError):
    """Two machines force opposite values of one output at one step."""

    def __init__(self, step, var):
        self.step = step
        self.var = var
        super().__init__(f"conflicting values for output '{var}' at step {step}")


class NotCliquey(GxuError):
    """A strongly connected component of a machine is not a bidirectional clique."""


class SizeBlowup(GxuError):
    """Clause-count guard tripped during distributive CNF conversion."""


class IndexOverflow(GxuError):
    """An encoding referenced a step beyond the allowed range."""


class MissingDefinition(GxuError):
    """Skolemization found an output variable without a candidate definition."""


class NotUnsat(GxuError):
    """Interpolation was asked for a satisfiable pair."""


class MalformedProof(GxuError):
    """A resolution proof failed verification."""


class TooLarge(GxuError):
    """Brute-force oracle called outside its exhaustive regime."""


class TraceTooShort(GxuError):
    """A bounded-semantics check needs a longer trace."""
