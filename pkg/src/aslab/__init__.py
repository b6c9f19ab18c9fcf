"""Assouad-type dimensions and spectra for parabolic Kleinian limit sets and Julia sets.

Closed-form predictions live in :mod:`aslab.formulas`, hyperbolic plumbing in
:mod:`aslab.geometry`, point clouds and measure oracles in
:mod:`aslab.generators`, empirical estimators in :mod:`aslab.estimators` and
the command line in :mod:`aslab.harness`.
"""

__version__ = "0.1.0"
