"""H(curl)-conforming, grad-curl-nonconforming tetrahedral elements for the quad-curl problem."""

__version__ = "0.1.0"

from .assembly import assemble_matrices, assemble_system, number_dofs  # noqa: E402
from .experiments import compute_errors, interpolation_study, run_convergence  # noqa: E402
from .fields import AnalyticField, example_solution  # noqa: E402
from .interpolation import commuting_check, interpolate_U, interpolate_V  # noqa: E402
from .local_spaces import build_U, build_V  # noqa: E402
from .mesh import build_cube_mesh  # noqa: E402
from .quadrature import make_rule  # noqa: E402
from .solver import solve  # noqa: E402

__all__ = [
    "AnalyticField", "assemble_matrices", "assemble_system", "build_U", "build_V",
    "build_cube_mesh", "commuting_check", "compute_errors", "example_solution",
    "interpolate_U", "interpolate_V", "interpolation_study", "make_rule", "number_dofs",
    "run_convergence", "solve",
]
