"""Fatigue life of specimens with stochastic surface roughness.

Gaussian-process rough profiles, graded triangular specimen meshes, a
phase-field fatigue finite-element solver and Monte-Carlo reduction to
surface factors.
"""

__version__ = "0.1.0"
