from .assembly import (
    assemble,
    assemble_vector,
    hessian_normal_dot_grad,
    mass,
    mass_matrix,
    normal_flux,
    stiffness,
    stiffness_matrix,
    third_normal_colon_hessian,
)
from .quadrature import QuadratureRule, quad_edge, quad_triangle
from .solve import SingularSystemError, factorize, residual, solve_linear
from .space import (
    DiscreteFunction,
    FunctionSpace,
    eval_basis,
    evaluate,
    evaluate_in_cells,
    interpolate,
    make_space,
)

__all__ = [
    "DiscreteFunction",
    "FunctionSpace",
    "QuadratureRule",
    "SingularSystemError",
    "assemble",
    "assemble_vector",
    "eval_basis",
    "evaluate",
    "evaluate_in_cells",
    "factorize",
    "hessian_normal_dot_grad",
    "interpolate",
    "make_space",
    "mass",
    "mass_matrix",
    "normal_flux",
    "quad_edge",
    "quad_triangle",
    "residual",
    "solve_linear",
    "stiffness",
    "stiffness_matrix",
    "third_normal_colon_hessian",
]
