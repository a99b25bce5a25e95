"""First local cohomology of matrix groups over Z/p^nZ and local-global divisibility."""

__version__ = "0.1.0"
