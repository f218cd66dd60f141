"""Shared convergence studies.

The expensive sweeps run once per session and are reused by the unit tests
and the acceptance suite.
"""

from dataclasses import dataclass, field

import pytest

from tikhcurv.analysis import ErrorReport, ExperimentSpec, convergence_sweep
from tikhcurv.reconstruction import ReconstructionConfig, optimality_check

LEVELS = (16, 32, 64, 128)
LAPLACE_ALPHAS = (1.0, 0.1, 0.01)
DROPLET_ALPHAS = (10.0, 1.0, 0.1, 0.01)


ACCEPTANCE_LOG = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LOG] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LOG, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line for a criterion, print it and fail the test if it did not pass."""
    log = request.config.stash[ACCEPTANCE_LOG]

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        log.append(line)
        print(line)
        assert ok, line

    return record


@dataclass
class Study:
    report: ErrorReport
    optimality: dict = field(default_factory=dict)  # (h, alpha) -> OptimalityCheck
    means: dict = field(default_factory=dict)  # (h, alpha) -> mean curvature along the interface


def run_study(spec: ExperimentSpec, check_optimality=False, curvature_mean=False) -> Study:
    from tikhcurv.analysis import interface_mean
    from tikhcurv.reconstruction import curvature_field

    study = Study(ErrorReport())

    def on_cell(cell):
        key = (cell.h, cell.alpha)
        if check_optimality and cell.result is not None:
            make = ReconstructionConfig.h3 if spec.method == "h3" else ReconstructionConfig.h2
            study.optimality[key] = optimality_check(cell.phi_h, cell.result, make(cell.alpha, rescale=spec.rescale))
        if curvature_mean and cell.gamma is not None:
            kappa = curvature_field(cell.result) if cell.result is not None else -cell.laplacian
            study.means[key] = interface_mean(kappa, cell.gamma)

    study.report = convergence_sweep(spec, on_cell)
    return study


@pytest.fixture(scope="session")
def laplace_h3_sweep():
    return run_study(ExperimentSpec("laplace_sine", "h3", "exact", sizes=LEVELS, alphas=LAPLACE_ALPHAS),
                     check_optimality=True)


@pytest.fixture(scope="session")
def laplace_weak_sweeps():
    return {
        m: convergence_sweep(ExperimentSpec("laplace_sine", m, "exact", sizes=LEVELS, alphas=(0.0,)))
        for m in ("weak_p1", "weak_p2")
    }


@pytest.fixture(scope="session")
def droplet_h3_exact():
    return run_study(ExperimentSpec("droplet", "h3", "exact", sizes=LEVELS, alphas=DROPLET_ALPHAS),
                     check_optimality=True, curvature_mean=True)


@pytest.fixture(scope="session")
def droplet_weak_p2_exact():
    return convergence_sweep(ExperimentSpec("droplet", "weak_p2", "exact", sizes=LEVELS))


@pytest.fixture(scope="session")
def droplet_weak_p1_brute():
    return convergence_sweep(ExperimentSpec("droplet", "weak_p1", "brute_force", sizes=LEVELS))


@pytest.fixture(scope="session")
def droplet_noisy():
    return {
        "weak_p2": convergence_sweep(ExperimentSpec("droplet", "weak_p2", "brute_force", sizes=LEVELS)),
        "h3": convergence_sweep(ExperimentSpec("droplet", "h3", "brute_force", sizes=LEVELS, alphas=(10.0,))),
    }


@pytest.fixture(scope="session")
def sharp_wetting_finest():
    finest = (LEVELS[-1],)
    return {
        m: convergence_sweep(ExperimentSpec("wetting_sharp", m, "exact", sizes=finest, alphas=(0.01,)))
        for m in ("h2", "h3")
    }
