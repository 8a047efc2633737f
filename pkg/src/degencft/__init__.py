"""Free-fermion conformal field theory on degenerate Riemann surfaces, at finite energy cutoff."""
from . import boundary, fock, geometry, implementing, net, segal, virasoro, voa
from .boundary import BoundaryFunction
from .fock import FockSpace, enumerate_basis

__version__ = "0.1.0"

__all__ = ["boundary", "fock", "geometry", "implementing", "net", "segal", "virasoro", "voa",
           "BoundaryFunction", "FockSpace", "enumerate_basis"]
