"""opscan: EVM opcode-sequence security threat scanner.

Disassembles contract bytecode into opcode tokens and classifies the
sequences with a from-scratch two-layer LSTM.
"""

__version__ = "0.1.0"
