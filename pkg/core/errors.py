from typing import Optional, TYPE_CHECKING

if TYPE_CHECKING:
    from models.trace import SimulationTrace


class ToolkitError(Exception):
    """Base error for everything raised by the toolkit."""
    exit_code = 1

    def __init__(self, message: str):
        self.message = message
        super().__init__(message)


class ConfigurationError(ToolkitError):
    """Invalid configuration; `field` names the offending setting when known."""
    exit_code = 1

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class ScenarioParseError(ConfigurationError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ContractViolationError(ToolkitError):
    exit_code = 2

    def __init__(self, message: str, block: Optional[str] = None):
        self.block = block
        super().__init__(message)


class SimulationDivergedError(ToolkitError):
    """
    Non-finite signal during a run. `step` and `block` locate the failure,
    `trace` holds the rows completed before it (attached by the loop).
    """
    exit_code = 2

    def __init__(
        self,
        message: str,
        step: Optional[int] = None,
        block: Optional[str] = None,
        trace: Optional["SimulationTrace"] = None,
    ):
        self.step = step
        self.block = block
        self.trace = trace
        super().__init__(message)

    def __str__(self) -> str:
        where = []
        if self.block:
            where.append(f"block={self.block}")
        if self.step is not None:
            where.append(f"step={self.step}")
        return f"{self.message} ({', '.join(where)})" if where else self.message


class TraceWriteError(ToolkitError):
    exit_code = 3

    def __init__(self, message: str, path: str):
        self.path = path
        super().__init__(f"{path}: {message}")
