"""Exception hierarchy shared by all modules."""


class MsoGraphError(Exception):
    """Base class for all errors raised by this package."""


class GraphError(MsoGraphError):
    pass


class EmptyNodeSet(GraphError):
    pass


class DanglingEndpoint(GraphError):
    def __init__(self, edge):
        super().__init__(f"edge {edge!r} has an endpoint outside the node set")
        self.edge = edge


class UnknownLabel(GraphError):
    def __init__(self, label):
        super().__init__(f"label {label!r} is not in the alphabet")
        self.label = label


class EmptySelection(GraphError):
    pass


class NodeNotInGraph(GraphError):
    def __init__(self, node):
        super().__init__(f"node {node!r} is not in the graph")
        self.node = node


class UnmappedLabel(GraphError):
    def __init__(self, label):
        super().__init__(f"no image for label {label!r}")
        self.label = label


class FormulaError(MsoGraphError):
    pass


class IllScoped(FormulaError):
    pass


class NotClosed(FormulaError):
    pass


class UnboundVariable(FormulaError):
    pass


class ForeignNode(FormulaError):
    pass


class EmptyPattern(FormulaError):
    pass


class ComputationGraphError(MsoGraphError):
    pass


class NoNuEdge(ComputationGraphError):
    pass


class NuSelfLoop(ComputationGraphError):
    def __init__(self, node):
        super().__init__(f"self-loop {node!r} on the pairing label")
        self.node = node


class MissingClosureEdge(ComputationGraphError):
    def __init__(self, src, dst):
        super().__init__(f"missing closure edge from {src!r} to {dst!r}")
        self.src = src
        self.dst = dst


class EmptyMiddle(ComputationGraphError):
    pass


class ReservedLabelInUse(MsoGraphError):
    pass


class LabelCollision(MsoGraphError):
    pass


class AlphabetMismatch(MsoGraphError):
    pass


class BudgetExceeded(MsoGraphError):
    pass


class EncodingError(MsoGraphError):
    pass


class ReservedSymbolInGamma(EncodingError):
    pass


class MalformedEncoding(EncodingError):
    def __init__(self, position, reason):
        super().__init__(f"malformed encoding at position {position}: {reason}")
        self.position = position
        self.reason = reason


class FormatError(MsoGraphError):
    """Parse error in one of the text file formats."""

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column
