class InvalidParameter(Exception):
    """
    Raised when a generator or analysis receives an out-of-range parameter
    """

    def __init__(self, name: str, value: object, reason: str = "must be positive"):
        msg = f"Invalid parameter {name}={value!r}: {reason}."
        super().__init__(msg)


class TraceParseError(Exception):
    """
    Raised when a trace file line does not conform to the trace grammar
    """

    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        msg = f"Malformed trace at line {line_no}: {reason}"
        super().__init__(msg)


class InvalidAddress(Exception):
    """
    Raised when a physical address or a DRAM coordinate lies outside the configured geometry
    """

    def __init__(self, what: str, value: object):
        msg = f"Invalid {what}: {value!r} is outside the configured geometry."
        super().__init__(msg)


class OutOfMemory(Exception):
    """
    Raised when no free page frame is left in any cube
    """

    def __init__(self, page: int):
        msg = f"No free frame left to map page {page:#x}."
        super().__init__(msg)


class SegmentationFault(Exception):
    """
    Raised when a process touches an address outside its declared virtual extent
    """

    def __init__(self, process_id: int, vaddr: int):
        msg = f"Process {process_id} accessed {vaddr:#x} outside its virtual extent."
        super().__init__(msg)


class InvalidPage(Exception):
    """
    Raised when a migration is requested for a page that has no mapping
    """

    def __init__(self, page: int):
        msg = f"Page {page:#x} is not mapped."
        super().__init__(msg)


class InternalConsistencyError(Exception):
    """
    Raised when simulator bookkeeping contradicts itself, e.g. retiring an absent NMP entry
    """

    def __init__(self, reason: str, cycle: int | None = None):
        where = f" at cycle {cycle}" if cycle is not None else ""
        msg = f"Internal consistency violated{where}: {reason}"
        super().__init__(msg)


class ShapeMismatch(Exception):
    """
    Raised when a state vector does not match the Q-network input width
    """

    def __init__(self, expected: int, actual: int):
        msg = f"State vector has length {actual}, network expects {expected}."
        super().__init__(msg)


class TrainingDiverged(Exception):
    """
    Raised when the training loss becomes non-finite
    """

    def __init__(self, step: int, loss: float):
        msg = f"Training halted at step {step}: non-finite loss {loss}."
        super().__init__(msg)


class ConfigValidationError(Exception):
    """
    Raised when a configuration file or model fails validation
    """

    def __init__(self, error: Exception | str, line_no: int | None = None):
        where = f" (line {line_no})" if line_no is not None else ""
        msg = f"Invalid configuration{where}: {error}"
        super().__init__(msg)


class TooManyProcesses(Exception):
    """
    Raised when a multi-program run is given more processes than allowed
    """

    def __init__(self, count: int, limit: int):
        msg = f"{count} processes requested, at most {limit} are supported."
        super().__init__(msg)


class SimulationStalled(Exception):
    """
    Raised when the simulation cannot make progress or exceeds its cycle budget
    """

    def __init__(self, cycle: int, reason: str):
        self.cycle = cycle
        msg = f"Simulation stalled at cycle {cycle}: {reason}"
        super().__init__(msg)
