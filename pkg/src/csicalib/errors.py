"""Exception hierarchy shared across the toolkit."""


class CsiCalibError(Exception):
    """Base class for all toolkit errors."""


# --- trace parsing -----------------------------------------------------------

class TruncatedRecord(CsiCalibError):
    """A framed record claims more bytes than remain in the input."""


class LengthMismatch(CsiCalibError):
    """Declared CSI payload length disagrees with the computed length."""


class BadPermutation(CsiCalibError):
    """Antenna selection byte does not decode to a valid port permutation."""


class InvariantViolation(CsiCalibError):
    """A record field is out of range or inconsistent."""


class SchemaError(CsiCalibError):
    """A text-trace line is malformed; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


# --- calibration / phase -----------------------------------------------------

class AbsentPort(CsiCalibError):
    """Operation requested on a port whose RSSI readout marks it absent."""


class AbsentAgc(CsiCalibError):
    """Record carries no AGC readout."""


class EmptyInput(CsiCalibError):
    """An aggregate was requested over an empty collection."""


class ZeroChannel(CsiCalibError):
    """Power ratio requested against an all-zero channel."""


class AllZeroCsi(CsiCalibError):
    """Every CSI component of the record is zero; calibration impossible."""


class ZeroEntry(CsiCalibError):
    """Phase of an exactly-zero complex sample is undefined."""


class InsufficientData(CsiCalibError):
    """Not enough samples for the requested statistic."""


# --- simulation / control ----------------------------------------------------

class ConfigError(CsiCalibError):
    """Simulation or CLI configuration is invalid."""


class InsufficientPorts(CsiCalibError):
    """Control loop needs at least two ports with loss estimates."""
