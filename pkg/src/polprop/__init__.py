"""Polarisation propagation for normally hyperbolic operators on vector bundles.

Submodules: :mod:`exprs` (symbolic coefficients), :mod:`geometry`
(spacetimes and null flows), :mod:`symbols` (matrix symbol calculus),
:mod:`nhop` (operators and connections), :mod:`bichar` (strips, relation and
transport), :mod:`polsets` (relation set and fibres), :mod:`proca` and
:mod:`cli`.
"""

__version__ = "0.1.0"
