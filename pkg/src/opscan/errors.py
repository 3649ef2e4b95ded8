"""Exception hierarchy shared across the toolkit.

Everything raised on bad *input* derives from OpscanError so the CLI can
map it to exit code 1; anything else is treated as an internal error (2).
"""


class OpscanError(Exception):
    """Base class for all domain errors raised by opscan."""


# --- bytecode parsing / disassembly ---

class OddHexLength(OpscanError):
    pass


class NonHexCharacter(OpscanError):
    def __init__(self, char: str, offset: int):
        super().__init__(f"non-hex character {char!r} at offset {offset}")
        self.char = char
        self.offset = offset


class UnknownMnemonic(OpscanError):
    pass


# --- dataset preparation ---

class EmptyClass(OpscanError):
    pass


class EmptyCorpus(OpscanError):
    pass


# --- resampling ---

class TooFewSamples(OpscanError):
    pass


class TargetTooLarge(OpscanError):
    pass


# --- model ---

class DimensionMismatch(OpscanError):
    pass


class LengthMismatch(OpscanError):
    pass


class ShapeMismatch(OpscanError):
    pass


class StaleCache(OpscanError):
    pass


class IndexOutOfRange(OpscanError):
    pass


class CheckpointError(OpscanError):
    pass


# --- metrics ---

class SingleClass(OpscanError):
    pass


class UndefinedMetric(OpscanError):
    pass
