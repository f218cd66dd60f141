"""Error norms, convergence orders and experiment sweeps."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .baseline import weak_laplacian
from .fem import DiscreteFunction, FunctionSpace, evaluate_in_cells, quad_edge
from .fem.assembly import cell_batches
from .fem.quadrature import MAX_EXACTNESS
from .fem.solve import SingularSystemError
from .levelset import (
    EmptyInterfaceError,
    InterfacePolyline,
    UnreachableVertexError,
    brute_force_signed_distance,
    circle_levelset,
    extract_interface,
    fmm_signed_distance,
    inside_circle,
)
from .mesh import Pattern, build_rect_mesh, h_max
from .projection import AnalyticField, project, sine_field
from .reconstruction import ReconstructionConfig, curvature_field, reconstruct

CSV_HEADER = ("h", "alpha", "err_domain", "err_interface", "order_domain", "order_interface")

TEST_CASES = ("laplace_sine", "droplet", "wetting_orthogonal", "wetting_sharp")
METHODS = ("h3", "h2", "weak_p1", "weak_p2")
SOURCES = ("exact", "brute_force", "fmm")

# accepted spellings on the command line
METHOD_ALIASES = {"weak1": "weak_p1", "weak2": "weak_p2"}
SOURCE_ALIASES = {"signed": "brute_force"}


# ---------------------------------------------------------------------------
# error norms


def _values_on_batch(ref, geo, ref_pts):
    if isinstance(ref, DiscreteFunction):
        return ref.cell_values(0, ref_pts, geo.cells)
    if callable(ref):
        return np.asarray(ref(geo.points), dtype=float)
    return np.full(geo.weights.shape, float(ref))


def l2_error_domain(f: DiscreteFunction, ref) -> float:
    """``||f - ref||`` over the mesh of ``f``.

    ``ref`` may be a discrete function on the same mesh, an analytic field
    (or any callable on coordinate arrays) or a constant.
    """
    degree = f.space.degree
    if isinstance(ref, DiscreteFunction):
        if ref.space.mesh is not f.space.mesh:
            raise ValueError("reference lives on a different mesh")
        degree = max(degree, ref.space.degree)
    exactness = min(2 * degree + 2, MAX_EXACTNESS)
    total = 0.0
    for geo, ref_pts in cell_batches(f.space.mesh, exactness):
        diff = f.cell_values(0, ref_pts, geo.cells) - _values_on_batch(ref, geo, ref_pts)
        total += float(np.sum(geo.weights * diff * diff))
    return math.sqrt(total)


def _segment_quadrature(gamma: InterfacePolyline, mesh):
    rule = quad_edge(5)  # three Gauss points
    t = rule.points
    pts = gamma.a[:, None, :] + t[None, :, None] * (gamma.b - gamma.a)[:, None, :]
    w = gamma.lengths[:, None] * rule.weights[None, :]
    cells = np.repeat(gamma.cells, len(t))
    x0 = mesh.vertices[mesh.cells[cells, 0]]
    jinv = np.linalg.inv(mesh.jacobians[cells])
    xi = np.einsum("nai,ni->na", jinv, pts.reshape(-1, 2) - x0)
    bary = np.column_stack([1.0 - xi.sum(axis=1), xi])
    return cells, bary, pts.reshape(-1, 2), w.ravel()


def _interface_values(kappa_h: DiscreteFunction, gamma: InterfacePolyline):
    if len(gamma) == 0:
        raise EmptyInterfaceError("interface is empty")
    cells, bary, pts, w = _segment_quadrature(gamma, kappa_h.space.mesh)
    return evaluate_in_cells(kappa_h, cells, bary), pts, w


def l2_error_interface(kappa_h: DiscreteFunction, kappa_exact, gamma: InterfacePolyline) -> float:
    """``||kappa_h - kappa_exact||`` along the discrete interface.

    Each segment is integrated with three Gauss points; ``kappa_h`` is
    evaluated in the cell that owns the segment.
    """
    vals, pts, w = _interface_values(kappa_h, gamma)
    exact = np.asarray(kappa_exact(pts), dtype=float) if callable(kappa_exact) else float(kappa_exact)
    return math.sqrt(float(np.sum(w * (vals - exact) ** 2)))


def interface_mean(kappa_h: DiscreteFunction, gamma: InterfacePolyline) -> float:
    """Length-weighted mean of ``kappa_h`` along the interface."""
    vals, _, w = _interface_values(kappa_h, gamma)
    return float(np.sum(w * vals) / np.sum(w))


def estimated_orders(h: Sequence[float], err: Sequence[float | None]) -> list[float | None]:
    """``log(e_i / e_{i+1}) / log(h_i / h_{i+1})`` between consecutive entries; ``None`` first."""
    out: list[float | None] = [None]
    for i in range(1, len(h)):
        e0, e1 = err[i - 1], err[i]
        if e0 is None or e1 is None or e0 <= 0 or e1 <= 0 or h[i - 1] == h[i]:
            out.append(None)
        else:
            out.append(math.log(e0 / e1) / math.log(h[i - 1] / h[i]))
    return out


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class ErrorRow:
    h: float
    alpha: float
    err_domain: float | None = None
    err_interface: float | None = None
    order_domain: float | None = None
    order_interface: float | None = None


@dataclass
class ErrorReport:
    """Rows sorted by decreasing ``h``; orders compare rows sharing an ``alpha``."""

    rows: list[ErrorRow] = field(default_factory=list)

    @classmethod
    def from_errors(cls, records) -> "ErrorReport":
        """Build from ``(h, alpha, err_domain, err_interface)`` tuples in any order.

        Rows are sorted by decreasing ``h`` (ties by decreasing ``alpha``);
        each order is taken against the next coarser row with the same ``alpha``.
        """
        records = sorted(records, key=lambda r: (-r[0], -r[1]))
        last: dict[float, tuple] = {}
        rows = []
        for h, alpha, ed, ei in records:
            od = oi = None
            if alpha in last:
                hp, edp, eip = last[alpha]
                od = estimated_orders([hp, h], [edp, ed])[1]
                oi = estimated_orders([hp, h], [eip, ei])[1]
            last[alpha] = (h, ed, ei)
            rows.append(ErrorRow(h, alpha, ed, ei, od, oi))
        return cls(rows)

    def __len__(self):
        return len(self.rows)

    def alphas(self) -> list[float]:
        return sorted({r.alpha for r in self.rows}, reverse=True)

    def series(self, alpha, column="err_domain"):
        """``(h, values)`` for one ``alpha``, coarse to fine."""
        sel = [r for r in self.rows if r.alpha == alpha]
        return np.array([r.h for r in sel]), [getattr(r, column) for r in sel]


def _fmt(x):
    return "" if x is None else format(x, ".17g")


def _parse(s):
    return None if s == "" else float(s)


def write_csv(report: ErrorReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in report.rows:
            w.writerow([_fmt(getattr(r, name)) for name in CSV_HEADER])


def read_csv(path) -> ErrorReport:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        rows = []
        for line in reader:
            vals = [_parse(s) for s in line]
            rows.append(ErrorRow(*vals))
    return ErrorReport(rows)


def write_plot(report: ErrorReport, path, column=None, title=None) -> None:
    """Log-log SVG of error against ``h``, one line per ``alpha``.

    ``column`` defaults to the interface error when the report has one.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if column is None:
        has_interface = any(r.err_interface is not None for r in report.rows)
        column = "err_interface" if has_interface else "err_domain"
    with matplotlib.rc_context({"svg.hashsalt": "tikhcurv", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 4))
        for alpha in report.alphas():
            h, e = report.series(alpha, column)
            keep = [i for i, v in enumerate(e) if v is not None and v > 0]
            if keep:
                ax.loglog(h[keep], [e[i] for i in keep], "o-", label=f"alpha={alpha:g}")
        ax.set_xlabel("h")
        ax.set_ylabel("error")
        if title:
            ax.set_title(title)
        if report.rows:
            ax.legend()
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


# ---------------------------------------------------------------------------
# experiments


@dataclass(frozen=True)
class TestCase:
    name: str
    bounds: tuple[float, float, float, float]
    field: AnalyticField
    sign: Callable | None = None  # region sign for distance sources
    curvature: float | None = None  # exact interface curvature


def _circle_case(name, center, R=0.5):
    return TestCase(name, (-1.0, 1.0, -1.0, 1.0), circle_levelset(center, R), inside_circle(center, R), 1.0 / R)


def test_case(name: str) -> TestCase:
    if name == "laplace_sine":
        return TestCase(name, (-11.0, 11.0, -11.0, 11.0), sine_field())
    if name == "droplet":
        return _circle_case(name, (0.0, 0.0))
    if name == "wetting_orthogonal":
        return _circle_case(name, (0.0, -1.0))
    if name == "wetting_sharp":
        return _circle_case(name, (0.0, -1.25))
    raise ValueError(f"unknown test case {name!r}; expected one of {TEST_CASES}")


test_case.__test__ = False  # keep pytest from collecting it
TestCase.__test__ = False


@dataclass(frozen=True)
class ExperimentSpec:
    test_case: str = "droplet"
    method: str = "h3"
    source: str = "exact"
    pattern: str = "crossed"
    bounds: tuple[float, float, float, float] | None = None
    sizes: tuple[int, ...] = (16,)
    alphas: tuple[float, ...] = (10.0, 0.01, 0.0001)
    out_dir: str | None = None
    rescale: bool = True
    ny: tuple[int, ...] | None = None  # defaults to ``sizes``

    def __post_init__(self):
        object.__setattr__(self, "method", METHOD_ALIASES.get(self.method, self.method))
        object.__setattr__(self, "source", SOURCE_ALIASES.get(self.source, self.source))
        if self.test_case not in TEST_CASES:
            raise ValueError(f"unknown test case {self.test_case!r}; expected one of {TEST_CASES}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.source not in SOURCES:
            raise ValueError(f"unknown level set source {self.source!r}; expected one of {SOURCES}")
        Pattern(self.pattern)
        if self.test_case == "laplace_sine" and self.source != "exact":
            raise ValueError("the sine test only supports the exact (projected) source")
        if not self.sizes or not self.alphas:
            raise ValueError("mesh sizes and alphas must be nonempty")
        if any(int(n) < 1 for n in self.sizes):
            raise ValueError(f"mesh sizes must be positive, got {self.sizes}")
        if self.ny is not None and len(self.ny) != len(self.sizes):
            raise ValueError("ny list must match the nx list")
        if any(not (math.isfinite(a) and a >= 0) for a in self.alphas):
            raise ValueError(f"alphas must be finite and >= 0, got {self.alphas}")

    @property
    def domain(self):
        return self.bounds if self.bounds is not None else test_case(self.test_case).bounds

    @property
    def is_weak(self):
        return self.method.startswith("weak")


class SweepError(RuntimeError):
    """A sweep cell failed; ``h`` and ``alpha`` identify it."""

    def __init__(self, message, h, alpha):
        super().__init__(message)
        self.h = h
        self.alpha = alpha


@dataclass
class CellOutcome:
    """Everything one sweep cell produced (handed to ``on_cell`` callbacks)."""

    h: float
    alpha: float
    phi_h: DiscreteFunction
    gamma: InterfacePolyline | None
    laplacian: DiscreteFunction  # Phi_2 or the weak Laplacian
    result: object = None  # ReconstructionResult for h2/h3
    err_domain: float | None = None
    err_interface: float | None = None


def input_levelset(case: TestCase, mesh, source: str, degree: int = 1):
    """Level set data of the given degree plus the discrete interface.

    The interface always comes from the projected exact level set.
    """
    p1 = FunctionSpace(mesh, 1)
    space = p1 if degree == 1 else FunctionSpace(mesh, degree)
    exact = project(p1, case.field)
    gamma = extract_interface(exact) if case.sign is not None else None
    if source == "exact":
        return (exact if degree == 1 else project(space, case.field)), gamma
    if source == "brute_force":
        return brute_force_signed_distance(mesh, gamma, case.sign, space), gamma
    if source == "fmm":
        return fmm_signed_distance(mesh, gamma, case.sign, space), gamma
    raise ValueError(f"unknown level set source {source!r}")


def run_cell(spec: ExperimentSpec, nx: int, ny: int, alpha: float, reference_projected=True) -> CellOutcome:
    """Run one ``(mesh, alpha)`` cell of an experiment."""
    case = test_case(spec.test_case)
    mesh = build_rect_mesh(*spec.domain, nx, ny, Pattern(spec.pattern))
    h = h_max(mesh)
    degree = 2 if spec.method == "weak_p2" else 1
    phi_h, gamma = input_levelset(case, mesh, spec.source, degree)
    result = None
    if spec.is_weak:
        lap = weak_laplacian(phi_h)
    else:
        make = ReconstructionConfig.h3 if spec.method == "h3" else ReconstructionConfig.h2
        result = reconstruct(phi_h, make(alpha, rescale=spec.rescale))
        lap = result.phi2
    out = CellOutcome(h, alpha, phi_h, gamma, lap, result)
    if case.field.laplacian is not None and spec.test_case == "laplace_sine":
        exact_lap = case.field.laplacian_field()
        ref = project(lap.space, exact_lap) if reference_projected else exact_lap
        out.err_domain = l2_error_domain(lap, ref)
    if gamma is not None:
        kappa = curvature_field(result) if result is not None else -lap
        out.err_interface = l2_error_interface(kappa, case.curvature, gamma)
    return out


def convergence_sweep(spec: ExperimentSpec, on_cell=None, reference_projected=True) -> ErrorReport:
    """Run every ``(mesh size, alpha)`` cell and collect the errors.

    Weak methods have no regularization weight; they run once per mesh and
    are reported with ``alpha = 0``. ``on_cell`` receives each
    :class:`CellOutcome` as it finishes.
    """
    alphas = (0.0,) if spec.is_weak else tuple(spec.alphas)
    nys = spec.ny or spec.sizes
    records = []
    for nx, ny in zip(spec.sizes, nys):
        for alpha in alphas:
            try:
                out = run_cell(spec, int(nx), int(ny), float(alpha), reference_projected)
            except (SingularSystemError, np.linalg.LinAlgError, EmptyInterfaceError, UnreachableVertexError) as exc:
                raise SweepError(f"cell nx={nx}, ny={ny}, alpha={alpha:g} failed: {exc}",
                                 (nx, ny), alpha) from exc
            if on_cell is not None:
                on_cell(out)
            records.append((out.h, float(alpha), out.err_domain, out.err_interface))
    return ErrorReport.from_errors(records)
