"""Desk-scale simulator for the unique-SVP -> two-point -> dihedral-coset ->
subset-sum reduction chain, with every step executable and testable classically."""

__version__ = "0.1.0"
