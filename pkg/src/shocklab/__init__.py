"""Viscous shock stability lab for the 3D isentropic Navier-Stokes equations.

Modules: ``gas`` (equation of state, Rankine-Hugoniot), ``profile``
(traveling-wave profile), ``weight`` (weight function and shift ODE),
``solver`` (moving-frame finite differences), ``diagnostics`` (entropy
functionals), ``inequalities`` (numerical inequality checks), ``cli``.
"""
__version__ = "0.1.0"
