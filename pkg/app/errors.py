"""Exception hierarchy shared by the toolkit.

Every error carries the exit code the command line reports for it, so the
CLI and the HTTP service can map failures without inspecting messages.
"""


class VcgsError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 3


class InputError(VcgsError):
    """Unknown identifiers, undeclared atoms or otherwise unusable input."""


class _Located(InputError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")

    def __reduce__(self):
        return (type(self), (self.message, self.line, self.column))


class ModelSyntaxError(_Located):
    """A model file (ICGS or vCGS text) does not follow its grammar."""


class FormulaSyntaxError(_Located):
    pass


class DialectError(InputError):
    """The formula parses but is not well formed in the requested dialect."""


class ProtocolError(InputError):
    def __init__(self, message: str, agent: str):
        self.agent = agent
        super().__init__(message)

    def __reduce__(self):
        return (type(self), (self.args[0], self.agent))


class CompileError(InputError):
    """The reduction cannot be applied to the given model."""


class ContractError(VcgsError):
    """A caller broke an operation's precondition (e.g. fired a disabled command)."""


class ResourceError(VcgsError):
    exit_code = 4

    def __init__(self, message: str, bound: int):
        self.bound = bound
        super().__init__(message)

    def __reduce__(self):
        return (type(self), (self.args[0], self.bound))
