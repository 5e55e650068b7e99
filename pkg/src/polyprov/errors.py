"""Exception hierarchy shared by every layer of the workbench."""


class WorkbenchError(Exception):
    """Base class for all errors raised by polyprov."""


class ParseError(WorkbenchError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


class GrammarViolation(WorkbenchError):
    pass


class RelativizerViolation(WorkbenchError):
    pass


# Kernel step failures. check_script turns these into a failed report.
class StepError(WorkbenchError):
    pass


class RuleShapeError(StepError):
    pass


class ConnectiveRestriction(StepError):
    pass


class FreshnessError(StepError):
    pass


class NotTautology(StepError):
    def __init__(self, message: str, countermodel: dict | None = None):
        super().__init__(message)
        self.countermodel = countermodel or {}


class AtomBudgetExceeded(StepError):
    pass


class MissingHypothesis(StepError):
    pass


class SideConditionViolation(StepError):
    pass


class UnknownScheme(StepError):
    pass


class IndexConstraintViolation(StepError):
    pass


class ScriptError(WorkbenchError):
    """Malformed script header or declarations."""


# Bounded arithmetic and propositional layer.
class UnsupportedConstruct(WorkbenchError):
    pass


class UnboundVariable(WorkbenchError):
    pass


class PartialAssignment(WorkbenchError):
    pass


class ClassViolation(WorkbenchError):
    pass


class ResourceBudgetExceeded(WorkbenchError):
    def __init__(self, message: str, budget: int):
        super().__init__(f"{message} (budget {budget})")
        self.budget = budget


# Machine compiler and experiments.
class BudgetExceeded(ResourceBudgetExceeded):
    pass


class ScheduleGap(WorkbenchError):
    pass


class MachineSpecError(WorkbenchError):
    pass


class DisjointnessViolation(WorkbenchError):
    def __init__(self, n: int):
        super().__init__(f"both languages contain n={n}")
        self.n = n


class CoveringViolation(WorkbenchError):
    def __init__(self, n: int):
        super().__init__(f"neither language contains n={n}")
        self.n = n


class CorpusError(WorkbenchError):
    pass
