"""Quantum memory, OTOC and neural-network surrogates for a chiral spin ring."""
__version__ = "0.1.0"
