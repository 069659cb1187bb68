"""Mean-field control of water-heater fleets for consumption tracking."""

__version__ = "0.1.0"
