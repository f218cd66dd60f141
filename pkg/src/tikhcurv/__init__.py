"""Curvature of level-set interfaces by Tikhonov reconstruction on triangle meshes."""

from .analysis import (
    ErrorReport,
    ErrorRow,
    ExperimentSpec,
    convergence_sweep,
    l2_error_domain,
    l2_error_interface,
    read_csv,
    write_csv,
    write_plot,
)
from .baseline import weak_laplacian
from .fem import DiscreteFunction, FunctionSpace, evaluate, interpolate, make_space
from .levelset import (
    InterfacePolyline,
    brute_force_signed_distance,
    circle_levelset,
    export_isolines,
    extract_interface,
    fmm_signed_distance,
)
from .mesh import Mesh, Pattern, build_rect_mesh, h_max, scale_mesh
from .projection import AnalyticField, project, sine_field
from .reconstruction import (
    ReconstructionConfig,
    ReconstructionResult,
    assemble_h2_system,
    assemble_h3_system,
    curvature_field,
    evaluate_functional,
    reconstruct,
)

__version__ = "0.1.0"
