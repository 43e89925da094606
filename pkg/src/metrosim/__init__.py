"""Simulation and analytics of quantum metrology under collective dephasing."""

__version__ = "0.1.0"
