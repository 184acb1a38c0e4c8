"""Trajectory-coherent states of the Dirac equation with anomalous magnetic moment.

Semiclassical wavepackets concentrated on classical phase trajectories of a
charged spinning particle in an external electromagnetic field, together
with spin transport, second-moment dynamics and verification suites.
"""
__version__ = "0.1.0"

from .constants import Constants, HamiltonianSpec  # noqa: E402
from .emfield import make_field, builtin_catalog  # noqa: E402
from .classical import PhasePoint, integrate_trajectory  # noqa: E402
from .germ import GermInit, integrate_germ  # noqa: E402
from .spin import integrate_spinor  # noqa: E402

__all__ = ["Constants", "HamiltonianSpec", "make_field", "builtin_catalog", "PhasePoint",
           "integrate_trajectory", "GermInit", "integrate_germ", "integrate_spinor", "__version__"]
