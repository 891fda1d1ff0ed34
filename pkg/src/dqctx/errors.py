"""Exception hierarchy.

Every error that the command line reports as an input problem derives from
:class:`DqctxError`; its ``exit_code`` is what ``dqctx`` returns.
"""

from __future__ import annotations


class DqctxError(Exception):
    exit_code = 2


class SchemaMismatch(DqctxError):
    pass


class KindMismatch(SchemaMismatch):
    """A built-in comparison applied to kinds that have no ordering."""


class MissingRelation(DqctxError):
    def __init__(self, relation: str, path: str | None = None):
        self.relation = relation
        self.path = path
        where = f" (expected {path})" if path else ""
        super().__init__(f"missing relation {relation}{where}")


class ValueParseError(DqctxError):
    def __init__(self, message: str, relation: str | None = None,
                 row: int | None = None, column: str | None = None):
        self.relation = relation
        self.row = row
        self.column = column
        loc = ""
        if relation is not None:
            loc = f"{relation}: row {row}, column {column}: "
        super().__init__(loc + message)


class DslSyntaxError(DqctxError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class SafetyViolation(DqctxError):
    def __init__(self, variable: str, rule_text: str):
        self.variable = variable
        super().__init__(f"unsafe variable {variable} in rule: {rule_text}")


class RecursionDetected(DqctxError):
    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("recursive predicates: " + " -> ".join(cycle))


class UnboundBuiltin(DqctxError):
    pass


class UnknownPredicate(DqctxError):
    pass


class MissingViewDefinition(DqctxError):
    def __init__(self, predicate: str):
        self.predicate = predicate
        super().__init__(f"no view definition for {predicate}")


class NonConjunctiveQuery(DqctxError):
    pass


class NonMonotoneQuery(DqctxError):
    pass


class UninvertibleView(DqctxError):
    pass


class BindingViolation(DqctxError):
    pass


class DuplicateSource(DqctxError):
    pass


class UnknownSource(DqctxError):
    pass


class ResolverFailure(DqctxError):
    exit_code = 3

    def __init__(self, message: str, call_log=None):
        self.call_log = call_log
        super().__init__(message)


class DomainTooLarge(DqctxError):
    pass


class EmptyBase(DqctxError):
    pass


class ContainmentViolation(DqctxError):
    pass


class SystemDefinitionError(DqctxError):
    """A contextual system violating its structural invariants."""
