"""Key-signal identification and targeted assertion prompting for Verilog RTL."""

__version__ = "0.1.0"
