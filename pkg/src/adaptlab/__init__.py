"""adaptlab: adaptive control and dynamics prediction with Bregman geometry.

A library + CLI implementing a catalog of adaptation laws (first-order,
mirror-descent/natural-gradient, composite, momentum, elastic, forgetting
gains), adaptive dynamics predictors and observers, implicit-regularization
oracles, and the reproduction studies exercising them at desk scale.
"""

__version__ = "0.1.0"

from . import control, errors, integrator, laws, plants, potentials, predictors, regcheck

__all__ = [
    "__version__",
    "control",
    "errors",
    "integrator",
    "laws",
    "plants",
    "potentials",
    "predictors",
    "regcheck",
]
