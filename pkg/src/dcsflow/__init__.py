"""Discrete conformal structures on closed triangulated surfaces: alpha-curvatures,
extended Ricci energies, combinatorial alpha-Ricci and alpha-Calabi flows."""

__version__ = "0.1.0"

from .curvature import (
    CurvatureReport,
    alpha_curvature,
    alpha_laplacian,
    classical_curvature,
    curvature_jacobian,
    curvature_report,
    linearization_spectrum,
)
from .energy import EnergyEvaluation, newton_solve, total_energy, triangle_energy
from .flows import FlowSpec, FlowTrace, conserved_quantity, flow_field, run, step
from .mesh import (
    BackgroundGeometry,
    Triangulation,
    WeightedSurface,
    builtin_mesh,
    check_structure_conditions,
    euler_characteristic,
    load_mesh,
    load_weights,
)
from .metric import ConformalState, edge_length, edge_lengths
from .triangle import angle_jacobian, extended_inner_angles, hyperbolic_area, inner_angles

__all__ = [
    "BackgroundGeometry",
    "ConformalState",
    "CurvatureReport",
    "EnergyEvaluation",
    "FlowSpec",
    "FlowTrace",
    "Triangulation",
    "WeightedSurface",
    "alpha_curvature",
    "alpha_laplacian",
    "angle_jacobian",
    "builtin_mesh",
    "check_structure_conditions",
    "classical_curvature",
    "conserved_quantity",
    "curvature_jacobian",
    "curvature_report",
    "edge_length",
    "edge_lengths",
    "euler_characteristic",
    "extended_inner_angles",
    "flow_field",
    "hyperbolic_area",
    "inner_angles",
    "linearization_spectrum",
    "load_mesh",
    "load_weights",
    "newton_solve",
    "run",
    "step",
    "total_energy",
    "triangle_energy",
]
