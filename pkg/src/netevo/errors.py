"""Exception hierarchy.

Everything raised on bad input derives from :class:`DataError`; numerical
dead ends (nothing left to choose, an all-zero likelihood step) derive from
:class:`NumericError`. The CLI maps the two families onto distinct exit codes.
"""


class NetEvoError(Exception):
    pass


class DataError(NetEvoError, ValueError):
    pass


class NumericError(NetEvoError, ArithmeticError):
    pass


class DuplicateEdge(DataError):
    pass


class SelfLoop(DataError):
    pass


class UnknownNode(DataError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class BadWeights(DataError):
    pass


class DuplicateComponent(DataError):
    pass


class SpecSyntaxError(DataError):
    pass


class MalformedStream(DataError):
    def __init__(self, index, reason):
        super().__init__(f"event {index}: {reason}")
        self.index = index
        self.reason = reason


class IncomparableReports(DataError):
    pass


class ParseError(DataError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line


class SelfLoopRecord(ParseError):
    pass


class EmptyStream(DataError):
    pass


class WarmupTooLarge(DataError):
    pass


class Exhausted(DataError):
    """Replay skeleton ran out before the edge target was reached."""


class EmptyChoiceSet(NumericError):
    pass


class AllZeroSteps(NumericError):
    def __init__(self, steps):
        steps = list(steps)
        super().__init__(
            f"{len(steps)} step(s) have zero probability under every candidate, "
            f"first at step {steps[0]}"
        )
        self.steps = steps


class Stuck(NumericError):
    """No legal internal edge exists (the graph is complete)."""
