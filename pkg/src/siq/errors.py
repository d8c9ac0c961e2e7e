"""Exception hierarchy for the siq package.

Everything raised deliberately by the library derives from :class:`SiqError`,
so the CLI can map any expected failure to exit code 2 with one handler.
"""


class SiqError(Exception):
    """Base class for all siq errors."""


# --- atom store ------------------------------------------------------------

class UnknownAtomError(SiqError):
    """An atom id was used that does not exist in the store."""


# --- Atomese text form ------------------------------------------------------

class AtomeseError(SiqError):
    """Malformed Atomese text."""


class IndentError(AtomeseError):
    """Tab in indentation, odd indent width, or an indentation jump."""


class NodeNameError(AtomeseError):
    """A name on a link type, or a missing name on a node type."""


class EmptyLinkError(AtomeseError):
    """A link-typed atom with no children."""


# --- detection ingest -------------------------------------------------------

class FormatError(SiqError):
    """A detection file line that does not follow the JSON Lines schema."""


class GeometryError(SiqError):
    """A bounding box without strictly positive width and height."""


class RangeError(SiqError):
    """A confidence value outside [0, 1]."""


# --- pattern matching -------------------------------------------------------

class IllFormedPatternError(SiqError):
    """A pattern that cannot be matched.

    Raised for variables occurring only in evaluatable clauses, and for
    evaluatable clauses whose shape the registered evaluator rejects.
    """


class NotNumericError(SiqError):
    """A comparison clause resolved a child to something not numeric."""


# --- chaining ----------------------------------------------------------------

class FixpointLimitError(SiqError):
    """Forward chaining did not reach a fixpoint within the pass limit."""


class CyclicRulesError(SiqError):
    """A cycle in the predicate dependencies of a rule set."""


# --- query language ----------------------------------------------------------

class QuerySyntaxError(SiqError):
    """Surface query text that does not follow the grammar.

    ``column`` is the 1-based position of the offending token.
    """

    def __init__(self, message: str, column: int | None = None):
        if column is not None:
            message = f"column {column}: {message}"
        super().__init__(message)
        self.column = column


class UnknownRelationError(QuerySyntaxError):
    """A relation keyword that is not one of the supported relations."""


class AliasClassMismatchError(SiqError):
    """The same alias used with two different class names."""


class EmptyQueryError(SiqError):
    """A query with no clauses."""
