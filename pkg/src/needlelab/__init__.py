"""Desk-scale workbench for collaborative needle insertions: layered
tissue phantoms, needle mechanics, compression-cavity A-scan sensing,
learned tip-force regression, PI admittance control and the analyses the
pipeline feeds."""

__version__ = "0.1.0"
