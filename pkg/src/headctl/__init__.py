"""Closed-loop simulation of an adaptive neuro-controller for 3-DOF soft-actuator head positioning."""

__version__ = "0.1.0"
