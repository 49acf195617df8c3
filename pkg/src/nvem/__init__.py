"""Node-based uniform-strain virtual elements for small-strain plasticity."""

from .constitutive import Material, PlasticState, StateField, return_map, return_map_batch, yield_value
from .mesh import Mesh, MeshError, build_patches, element_geometry, load_mesh, read_mesh, write_mesh
from .nodal_assembly import build_operators, nodal_operator, nodal_stability_matrix, nodal_strain_operator
from .problem import BenchmarkProblem, DirichletSpec, NeumannSpec, PrescribedNodes
from .solver import Analysis, AnalysisConfig, AnalysisResult, LoadStepResult, run_analysis, solve_load_step
from .vem_element import compute_projection, compute_strain_matrix, element_projections

__version__ = "0.1.0"
