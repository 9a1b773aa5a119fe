"""Delay-adaptive control simulator and bound-verification harness."""
__version__ = "0.1.0"
