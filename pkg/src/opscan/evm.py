"""EVM bytecode disassembly into opcode token sequences.

The instruction directory covers the 150 instructions of the current EVM
instruction set.  Two token ids are reserved in front of it: 0 for PAD
(sequence padding) and 1 for INVALID (unassigned bytes).  The designated
invalid instruction 0xFE is part of the directory but canonicalizes to the
reserved INVALID token, so it never appears in disassembled sequences
under its own id.
"""

from dataclasses import dataclass, field
from functools import lru_cache

from .errors import NonHexCharacter, OddHexLength, UnknownMnemonic

PAD_ID = 0
INVALID_ID = 1
PAD_MNEMONIC = "PAD"
INVALID_MNEMONIC = "INVALID"

# (opcode byte, mnemonic, delta = stack items required, alpha = stack items added)
_FIXED_ROWS = [
    (0x00, "STOP", 0, 0),
    (0x01, "ADD", 2, 1),
    (0x02, "MUL", 2, 1),
    (0x03, "SUB", 2, 1),
    (0x04, "DIV", 2, 1),
    (0x05, "SDIV", 2, 1),
    (0x06, "MOD", 2, 1),
    (0x07, "SMOD", 2, 1),
    (0x08, "ADDMOD", 3, 1),
    (0x09, "MULMOD", 3, 1),
    (0x0A, "EXP", 2, 1),
    (0x0B, "SIGNEXTEND", 2, 1),
    (0x10, "LT", 2, 1),
    (0x11, "GT", 2, 1),
    (0x12, "SLT", 2, 1),
    (0x13, "SGT", 2, 1),
    (0x14, "EQ", 2, 1),
    (0x15, "ISZERO", 1, 1),
    (0x16, "AND", 2, 1),
    (0x17, "OR", 2, 1),
    (0x18, "XOR", 2, 1),
    (0x19, "NOT", 1, 1),
    (0x1A, "BYTE", 2, 1),
    (0x1B, "SHL", 2, 1),
    (0x1C, "SHR", 2, 1),
    (0x1D, "SAR", 2, 1),
    (0x1E, "CLZ", 1, 1),
    (0x20, "KECCAK256", 2, 1),
    (0x30, "ADDRESS", 0, 1),
    (0x31, "BALANCE", 1, 1),
    (0x32, "ORIGIN", 0, 1),
    (0x33, "CALLER", 0, 1),
    (0x34, "CALLVALUE", 0, 1),
    (0x35, "CALLDATALOAD", 1, 1),
    (0x36, "CALLDATASIZE", 0, 1),
    (0x37, "CALLDATACOPY", 3, 0),
    (0x38, "CODESIZE", 0, 1),
    (0x39, "CODECOPY", 3, 0),
    (0x3A, "GASPRICE", 0, 1),
    (0x3B, "EXTCODESIZE", 1, 1),
    (0x3C, "EXTCODECOPY", 4, 0),
    (0x3D, "RETURNDATASIZE", 0, 1),
    (0x3E, "RETURNDATACOPY", 3, 0),
    (0x3F, "EXTCODEHASH", 1, 1),
    (0x40, "BLOCKHASH", 1, 1),
    (0x41, "COINBASE", 0, 1),
    (0x42, "TIMESTAMP", 0, 1),
    (0x43, "NUMBER", 0, 1),
    (0x44, "PREVRANDAO", 0, 1),
    (0x45, "GASLIMIT", 0, 1),
    (0x46, "CHAINID", 0, 1),
    (0x47, "SELFBALANCE", 0, 1),
    (0x48, "BASEFEE", 0, 1),
    (0x49, "BLOBHASH", 1, 1),
    (0x4A, "BLOBBASEFEE", 0, 1),
    (0x50, "POP", 1, 0),
    (0x51, "MLOAD", 1, 1),
    (0x52, "MSTORE", 2, 0),
    (0x53, "MSTORE8", 2, 0),
    (0x54, "SLOAD", 1, 1),
    (0x55, "SSTORE", 2, 0),
    (0x56, "JUMP", 1, 0),
    (0x57, "JUMPI", 2, 0),
    (0x58, "PC", 0, 1),
    (0x59, "MSIZE", 0, 1),
    (0x5A, "GAS", 0, 1),
    (0x5B, "JUMPDEST", 0, 0),
    (0x5C, "TLOAD", 1, 1),
    (0x5D, "TSTORE", 2, 0),
    (0x5E, "MCOPY", 3, 0),
    (0x5F, "PUSH0", 0, 1),
    (0xF0, "CREATE", 3, 1),
    (0xF1, "CALL", 7, 1),
    (0xF2, "CALLCODE", 7, 1),
    (0xF3, "RETURN", 2, 0),
    (0xF4, "DELEGATECALL", 6, 1),
    (0xF5, "CREATE2", 4, 1),
    (0xFA, "STATICCALL", 6, 1),
    (0xFD, "REVERT", 2, 0),
    (0xFE, "INVALID", 0, 0),
    (0xFF, "SELFDESTRUCT", 1, 0),
]


@dataclass(frozen=True)
class InstructionSpec:
    """One row of the EVM instruction directory."""

    opcode_byte: int
    mnemonic: str
    delta: int
    alpha: int
    immediate_len: int = 0


def _build_specs() -> list[InstructionSpec]:
    specs = [InstructionSpec(*row) for row in _FIXED_ROWS]
    for n in range(1, 33):
        specs.append(InstructionSpec(0x60 + n - 1, f"PUSH{n}", 0, 1, immediate_len=n))
    for n in range(1, 17):
        specs.append(InstructionSpec(0x80 + n - 1, f"DUP{n}", n, n + 1))
    for n in range(1, 17):
        specs.append(InstructionSpec(0x90 + n - 1, f"SWAP{n}", n + 1, n + 1))
    for n in range(5):
        specs.append(InstructionSpec(0xA0 + n, f"LOG{n}", n + 2, 0))
    specs.sort(key=lambda s: s.opcode_byte)
    return specs


@dataclass(frozen=True)
class InstructionTable:
    """The instruction directory plus the reserved PAD/INVALID token ids.

    Token ids 2..151 are assigned to the 150 directory entries in opcode
    order.  The 0xFE entry keeps its slot for the id arithmetic but both
    disassembly and mnemonic lookup canonicalize it to INVALID_ID.
    """

    entries: tuple[InstructionSpec, ...]
    by_byte: dict[int, InstructionSpec] = field(repr=False)
    token_of_mnemonic: dict[str, int] = field(repr=False)
    mnemonic_of_token: tuple[str, ...] = field(repr=False)

    @property
    def vocab_size(self) -> int:
        return len(self.mnemonic_of_token)

    def token_id(self, mnemonic: str) -> int:
        """Token id for a mnemonic; INVALID and PAD map to the reserved ids."""
        try:
            return self.token_of_mnemonic[mnemonic]
        except KeyError:
            raise UnknownMnemonic(f"unknown mnemonic {mnemonic!r}") from None

    def mnemonic(self, token_id: int) -> str:
        return self.mnemonic_of_token[token_id]

    def spec_for_byte(self, byte: int) -> InstructionSpec | None:
        return self.by_byte.get(byte)

    def sequence_token_ids(self) -> list[int]:
        """Token ids that can occur in disassembled code (excludes PAD and
        the 0xFE slot, whose occurrences are emitted as INVALID_ID)."""
        ids = []
        for spec in self.entries:
            if spec.mnemonic != INVALID_MNEMONIC:
                ids.append(self.token_of_mnemonic[spec.mnemonic])
        return ids


@lru_cache(maxsize=1)
def default_table() -> InstructionTable:
    specs = _build_specs()
    mnemonic_of_token = [PAD_MNEMONIC, INVALID_MNEMONIC]
    token_of_mnemonic = {PAD_MNEMONIC: PAD_ID}
    for spec in specs:
        mnemonic_of_token.append(spec.mnemonic)
        if spec.mnemonic != INVALID_MNEMONIC:
            token_of_mnemonic[spec.mnemonic] = len(mnemonic_of_token) - 1
    # 0xFE canonicalizes to the reserved id, its directory slot stays unused
    token_of_mnemonic[INVALID_MNEMONIC] = INVALID_ID
    return InstructionTable(
        entries=tuple(specs),
        by_byte={s.opcode_byte: s for s in specs},
        token_of_mnemonic=token_of_mnemonic,
        mnemonic_of_token=tuple(mnemonic_of_token),
    )


@dataclass
class OpcodeSequence:
    """Disassembled contract: token ids with a parallel mnemonic list."""

    tokens: list[int]
    mnemonics: list[str]
    raw_len: int

    def __post_init__(self):
        if len(self.tokens) != len(self.mnemonics):
            raise ValueError("tokens and mnemonics must be parallel lists")


def parse_hex(text: str) -> bytes:
    """Decode a hex string (optionally 0x-prefixed, whitespace allowed)."""
    compact = "".join(text.split())
    if compact[:2] in ("0x", "0X"):
        compact = compact[2:]
    for offset, ch in enumerate(compact):
        if ch not in "0123456789abcdefABCDEF":
            raise NonHexCharacter(ch, offset)
    if len(compact) % 2 != 0:
        raise OddHexLength(f"odd number of hex digits ({len(compact)})")
    return bytes.fromhex(compact)


def disassemble(code: bytes, table: InstructionTable | None = None) -> OpcodeSequence:
    """Scan bytecode left to right into an opcode token sequence.

    PUSHn immediates are consumed but not emitted (operands are data, not
    instructions).  Unassigned bytes and 0xFE emit the INVALID token.  A
    PUSHn whose operand overruns the end of code still emits its token.
    """
    if table is None:
        table = default_table()
    tokens: list[int] = []
    mnemonics: list[str] = []
    pos = 0
    n = len(code)
    while pos < n:
        spec = table.by_byte.get(code[pos])
        if spec is None or spec.mnemonic == INVALID_MNEMONIC:
            tokens.append(INVALID_ID)
            mnemonics.append(INVALID_MNEMONIC)
            pos += 1
            continue
        tokens.append(table.token_of_mnemonic[spec.mnemonic])
        mnemonics.append(spec.mnemonic)
        pos += 1 + spec.immediate_len
    return OpcodeSequence(tokens=tokens, mnemonics=mnemonics, raw_len=len(tokens))


def to_token_ids(mnemonics: list[str], table: InstructionTable | None = None) -> list[int]:
    """Map mnemonics to token ids; INVALID maps to the reserved id 1."""
    if table is None:
        table = default_table()
    return [table.token_id(m) for m in mnemonics]


def assemble(tokens: list[int], table: InstructionTable | None = None, rng=None) -> bytes:
    """Build bytecode whose disassembly reproduces `tokens`.

    PUSHn immediates are filled with rng bytes (zeros without an rng).
    Inverse of disassemble for sequences without INVALID tokens.
    """
    if table is None:
        table = default_table()
    by_mnemonic = {s.mnemonic: s for s in table.entries}
    out = bytearray()
    for tok in tokens:
        mnemonic = table.mnemonic(tok)
        if mnemonic == PAD_MNEMONIC:
            continue
        if mnemonic == INVALID_MNEMONIC:
            out.append(0xFE)
            continue
        spec = by_mnemonic[mnemonic]
        out.append(spec.opcode_byte)
        if spec.immediate_len:
            if rng is None:
                out.extend(bytes(spec.immediate_len))
            else:
                out.extend(int(b) for b in rng.integers(0, 256, size=spec.immediate_len))
    return bytes(out)
