"""Universal refocusing of unknown unitaries and inverse-free gate compilation."""

__version__ = "0.1.0"
