"""
Finite-volume solver kit for the generalized Aw-Rascle-Zhang traffic system.
"""

__version__ = "0.1.1"
