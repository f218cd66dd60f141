"""Tikhonov reconstruction of a smooth level set and its Laplacian.

Given a piecewise linear ``phi_h``, find ``Phi`` minimizing

    ||A Phi - phi_h||^2 + a0 ||Phi - phi_h||^2 + a1 |Phi|_1^2 + a2 |Phi|_2^2 + a3 |Phi|_3^2

where ``A`` is the L2 projection onto P1 and ``|.|_k`` the H^k seminorm.
The optimality system is solved as a set of second order equations in
``Phi_1 = Phi``, ``Phi_2 = Laplace Phi``, ``Phi_3 = Laplace Phi_2`` plus a
multiplier ``lam = A Phi`` in P1. Block order is ``[Phi_1 | Phi_2 | Phi_3 | lam]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .fem import (
    DiscreteFunction,
    FunctionSpace,
    assemble,
    hessian_normal_dot_grad,
    mass,
    normal_flux,
    residual,
    stiffness,
    third_normal_colon_hessian,
)
from .fem.solve import SingularSystemError, factorize
from .mesh import Mesh, h_max, scale_mesh

SMALL_ALPHA = 1e-14
BOUNDARY_EXACTNESS = 6


@dataclass(frozen=True)
class ReconstructionConfig:
    k: int = 3
    alpha0: float = 1.0
    alpha1: float = SMALL_ALPHA
    alpha2: float = SMALL_ALPHA
    alpha3: float = 1.0
    rescale: bool = True
    solver_tolerance: float = 1e-8

    def __post_init__(self):
        if self.k not in (2, 3):
            raise ValueError(f"Sobolev order must be 2 or 3, got {self.k!r}")
        alphas = self.alphas
        if not all(math.isfinite(a) and a >= 0 for a in alphas):
            raise ValueError(f"regularization weights must be finite and >= 0, got {alphas}")
        if self.k == 2 and self.alpha3 != 0:
            raise ValueError("alpha3 is unused for k=2 and must be 0")
        if not any(a > 0 for a in alphas):
            raise ValueError("at least one regularization weight must be positive")

    @property
    def alphas(self):
        return (self.alpha0, self.alpha1, self.alpha2, self.alpha3)

    @classmethod
    def h3(cls, alpha, **kw):
        """``alpha0 = alpha3 = alpha`` with the gradient and Hessian weights pinned tiny."""
        return cls(k=3, alpha0=alpha, alpha1=SMALL_ALPHA, alpha2=SMALL_ALPHA, alpha3=alpha, **kw)

    @classmethod
    def h2(cls, alpha, **kw):
        return cls(k=2, alpha0=alpha, alpha1=alpha, alpha2=alpha, alpha3=0.0, **kw)

    @property
    def degree(self):
        return 3 if self.k == 3 else 2


@dataclass
class ReconstructionResult:
    phi1: DiscreteFunction
    phi2: DiscreteFunction
    phi3: DiscreteFunction | None
    lam: DiscreteFunction
    residual: float
    r_used: float


class _Spaces:
    def __init__(self, mesh: Mesh, degree: int):
        self.mesh = mesh
        self.high = FunctionSpace(mesh, degree)
        self.p1 = FunctionSpace(mesh, 1)


def _check_data(phi_h: DiscreteFunction):
    if phi_h.space.degree != 1:
        raise ValueError(f"input level set must be P1, got P{phi_h.space.degree}")


def _blocks(spaces: _Spaces, cfg: ReconstructionConfig):
    V, Q = spaces.high, spaces.p1
    a0, a1, a2, a3 = cfg.alphas
    e = 2 * V.degree
    M = assemble(V, V, mass, e)
    K = assemble(V, V, stiffness, e)
    B = assemble(V, V, normal_flux, BOUNDARY_EXACTNESS, boundary=True)
    BH = assemble(V, V, hessian_normal_dot_grad, BOUNDARY_EXACTNESS, boundary=True)
    C = assemble(V, Q, mass, e)  # rows: P_m tests, cols: P1 trials
    M1 = assemble(Q, Q, mass, 2)
    return M, K, B, BH, C, M1


def _system(spaces: _Spaces, data: np.ndarray, cfg: ReconstructionConfig):
    V = spaces.high
    a0, a1, a2, a3 = cfg.alphas
    M, K, B, BH, C, M1 = _blocks(spaces, cfg)
    rhs1 = (1.0 + a0) * (C @ data)
    if cfg.k == 3:
        B3 = assemble(V, V, third_normal_colon_hessian, BOUNDARY_EXACTNESS, boundary=True)
        A11 = a0 * M + a1 * K + a2 * BH + a3 * B3
        A12 = -a2 * K - a3 * BH
        A13 = a3 * K
        A = sp.bmat(
            [
                [A11, A12, A13, C],
                [K - B, M, None, None],
                [None, K - B, M, None],
                [-C.T, None, None, M1],
            ],
            format="csr",
        )
        n = V.n_dofs
        b = np.concatenate([rhs1, np.zeros(2 * n + spaces.p1.n_dofs)])
    else:
        A11 = a0 * M + a1 * K + a2 * BH
        A = sp.bmat(
            [
                [A11, -a2 * K, C],
                [K - B, M, None],
                [-C.T, None, M1],
            ],
            format="csr",
        )
        b = np.concatenate([rhs1, np.zeros(V.n_dofs + spaces.p1.n_dofs)])
    return A, b


def assemble_h3_system(phi_h: DiscreteFunction, cfg: ReconstructionConfig):
    """Block system over ``(Phi_1, Phi_2, Phi_3, lam)`` in P3 x P3 x P3 x P1."""
    if cfg.k != 3:
        raise ValueError("assemble_h3_system needs a k=3 configuration")
    _check_data(phi_h)
    return _system(_Spaces(phi_h.space.mesh, 3), phi_h.coeffs, cfg)


def assemble_h2_system(phi_h: DiscreteFunction, cfg: ReconstructionConfig):
    """Block system over ``(Phi_1, Phi_2, lam)`` in P2 x P2 x P1."""
    if cfg.k != 2:
        raise ValueError("assemble_h2_system needs a k=2 configuration")
    _check_data(phi_h)
    return _system(_Spaces(phi_h.space.mesh, 2), phi_h.coeffs, cfg)


def reconstruct(phi_h: DiscreteFunction, cfg: ReconstructionConfig | None = None) -> ReconstructionResult:
    """Solve the mixed Tikhonov system for ``phi_h``.

    With ``cfg.rescale`` the problem is solved on the mesh scaled by
    ``r = 1 / h_max`` and transformed back: ``Phi_2`` picks up ``r**2`` and
    ``Phi_3`` picks up ``r**4``.
    """
    cfg = cfg or ReconstructionConfig()
    _check_data(phi_h)
    mesh = phi_h.space.mesh
    r = 1.0 / h_max(mesh) if cfg.rescale else 1.0
    work = scale_mesh(mesh, r) if r != 1.0 else mesh
    # nodal P1 coefficients are unchanged by the affine scaling
    A, b = _system(_Spaces(work, cfg.degree), phi_h.coeffs, cfg)
    try:
        x = factorize(A).solve(b, cfg.solver_tolerance)
    except SingularSystemError as exc:
        raise SingularSystemError(
            f"reconstruction system (k={cfg.k}, n={A.shape[0]}, r={r:.4g}) failed: {exc}",
            exc.pivot_index,
            exc.pivot_value,
        ) from exc
    res = residual(A, x, b)

    V = FunctionSpace(mesh, cfg.degree)
    Q = FunctionSpace(mesh, 1)
    n = V.n_dofs
    phi1 = DiscreteFunction(V, x[:n])
    phi2 = DiscreteFunction(V, r**2 * x[n : 2 * n])
    if cfg.k == 3:
        phi3 = DiscreteFunction(V, r**4 * x[2 * n : 3 * n])
        lam = DiscreteFunction(Q, x[3 * n :])
    else:
        phi3 = None
        lam = DiscreteFunction(Q, x[2 * n :])
    return ReconstructionResult(phi1, phi2, phi3, lam, res, r)


def curvature_field(result: ReconstructionResult) -> DiscreteFunction:
    """Discrete curvature ``-Phi_2`` (valid where the level set is a signed distance)."""
    return -result.phi2


def equivalent_unscaled_config(cfg: ReconstructionConfig, r: float) -> ReconstructionConfig:
    """Weights that make an unscaled solve reproduce a solve on the mesh scaled by ``r``.

    Scaling the domain by ``r`` multiplies the L2 terms by ``r**2`` and the
    order-k seminorm terms by ``r**(2 - 2k)``.
    """
    a0, a1, a2, a3 = cfg.alphas
    return replace(
        cfg, alpha0=a0, alpha1=a1 * r**-2, alpha2=a2 * r**-4, alpha3=a3 * r**-6, rescale=False
    )


class TikhonovFunctional:
    """Evaluates the discrete functional on the mesh the reconstruction works on.

    Seminorms of piecewise polynomials are taken cell by cell.
    """

    def __init__(self, phi_h: DiscreteFunction, cfg: ReconstructionConfig, space: FunctionSpace | None = None):
        _check_data(phi_h)
        self.cfg = cfg
        mesh = phi_h.space.mesh
        self.r = 1.0 / h_max(mesh) if cfg.rescale else 1.0
        work = scale_mesh(mesh, self.r) if self.r != 1.0 else mesh
        degree = space.degree if space is not None else cfg.degree
        V = FunctionSpace(work, degree)
        Q = FunctionSpace(work, 1)
        e = 2 * degree
        self.V = V
        self.M = assemble(V, V, mass, e)
        self.K = assemble(V, V, stiffness, e)
        self.H2 = assemble(V, V, _hessian_colon, e)
        self.H3 = assemble(V, V, _third_colon, e)
        self.C = assemble(V, Q, mass, e)
        self.M1 = assemble(Q, Q, mass, 2)
        self._m1 = factorize(self.M1)
        # phi_h embedded in the higher-order space (exact: P1 is a subspace)
        self.data = phi_h.coeffs
        self.data_high = _embed_p1(V, phi_h.coeffs)

    def __call__(self, coeffs) -> float:
        a0, a1, a2, a3 = self.cfg.alphas
        c = np.asarray(coeffs, dtype=float)
        proj = self._m1.solve(self.C.T @ c)
        mis = proj - self.data
        d = c - self.data_high
        return float(
            mis @ (self.M1 @ mis)
            + a0 * d @ (self.M @ d)
            + a1 * c @ (self.K @ c)
            + a2 * c @ (self.H2 @ c)
            + a3 * c @ (self.H3 @ c)
        )

    def l2_norm(self, coeffs) -> float:
        c = np.asarray(coeffs, dtype=float)
        return float(np.sqrt(c @ (self.M @ c)))


def evaluate_functional(phi: DiscreteFunction, phi_h: DiscreteFunction, cfg: ReconstructionConfig) -> float:
    """Value of the Tikhonov functional at ``phi``.

    When ``cfg.rescale`` is set the functional is the one on the scaled mesh,
    i.e. the functional the reconstruction actually minimizes.
    """
    return TikhonovFunctional(phi_h, cfg, phi.space)(phi.coeffs)


def _hessian_colon(u, v, g):
    return np.einsum("cqikl,cqjkl->cqij", v.hess, u.hess)


def _third_colon(u, v, g):
    return np.einsum("cqiklm,cqjklm->cqij", v.d3, u.d3)


def _embed_p1(V: FunctionSpace, p1_coeffs):
    """Coefficients in ``V`` of a P1 function (nodal interpolation on each cell)."""
    from .fem.element import lagrange

    lam = lagrange(1).tabulate(0, V.element.nodes)  # (nnodes, 3)
    out = np.empty(V.n_dofs)
    vals = np.einsum("nv,cv->cn", lam, p1_coeffs[V.mesh.cells])
    out[V.dof_map.ravel()] = vals.ravel()
    return out


@dataclass(frozen=True)
class OptimalityCheck:
    value: float  # J at the candidate
    worst_margin: float  # min over trials of J(candidate + eps*psi) - J(candidate)
    trials: int

    @property
    def passed(self) -> bool:
        return self.worst_margin >= -1e-12 * abs(self.value)


def optimality_check(phi_h: DiscreteFunction, result: ReconstructionResult, cfg: ReconstructionConfig,
                     directions=50, magnitudes=(1e-3, 1e-2), seed=0) -> OptimalityCheck:
    """Perturb ``result.phi1`` along random directions and compare functional values.

    Directions are random coefficient vectors normalized to unit L2 norm;
    each is tried with ``+eps`` and ``-eps`` for every magnitude.
    """
    J = TikhonovFunctional(phi_h, cfg, result.phi1.space)
    c = result.phi1.coeffs
    j0 = J(c)
    rng = np.random.default_rng(seed)
    worst = math.inf
    trials = 0
    for _ in range(directions):
        psi = rng.standard_normal(len(c))
        psi /= J.l2_norm(psi)
        for eps in magnitudes:
            for s in (eps, -eps):
                worst = min(worst, J(c + s * psi) - j0)
                trials += 1
    return OptimalityCheck(j0, worst, trials)
