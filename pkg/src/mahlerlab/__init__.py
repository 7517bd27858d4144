"""mahlerlab: numerical laboratory for Mahler measure identities."""

__version__ = "0.1.0"
