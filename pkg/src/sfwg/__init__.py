"""Stabilizer-free weak Galerkin solver for the Poisson problem on convex polygonal meshes."""
from ._backend import COMPILED
from .analysis import (FIELDS, ConvergenceReport, convergence_study, energy_norm, get_field,
                       h1_norm, norm_equivalence_study, project_q0, project_qb,
                       singularity_study)
from .assembly import (SparseSpd, assemble_load, assemble_stiffness, build_dof_map,
                       counting_lower_bound)
from .linsolve import SolveStats, cg_solve, nullity_probe
from .mesh import (Mesh, MeshError, build_hexagon_mesh, build_uniform_quad_mesh,
                   build_uniform_triangle_mesh, read_mesh, refine_uniform, shape_report,
                   write_mesh)
from .poly_basis import dim_pk, edge_quadrature, triangle_quadrature
from .weak_gradient import auto_degree, build_local_operator, j_zero, local_stiffness

__version__ = "0.1.0"
