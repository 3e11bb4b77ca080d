"""Iterative MIMO detection and decoding with approximate soft-information
exchange: a soft-in/soft-out sphere decoder with selective update and
performance-driven LLR clipping, a selective log-MAP BCJR decoder, and a
link-level Monte Carlo harness with full complexity instrumentation."""

__version__ = "0.1.0"
