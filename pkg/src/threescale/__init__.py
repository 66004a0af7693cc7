"""Three-timescale singular perturbation reduction of polynomial ODE systems."""

__version__ = "0.1.0"
