import numpy as np
import pytest

from mesothermo import dynamics
from mesothermo.grid import PhaseGrid
from mesothermo.verify import CHECKS, run_checks


@pytest.fixture
def flipped_fp_sign(monkeypatch):
    """Inject a sign error into the Fokker-Planck face flux."""
    original = dynamics.fp_flux

    def flipped(*args, **kwargs):
        return -original(*args, **kwargs)

    monkeypatch.setattr(dynamics, "fp_flux", flipped)


@pytest.fixture
def broken_quadrature(monkeypatch):
    """Corrupt one velocity quadrature weight."""

    def weights(self):
        w = np.full(self.n_v, self.dv)
        w[self.n_v // 2] *= 1.01
        return w

    monkeypatch.setattr(PhaseGrid, "v_weights", property(weights))


@pytest.mark.parametrize("name", ["quadrature", "maxent", "gateaux", "dissipation", "legendre",
                                  "pg_structure", "constitutive", "bracket", "viscosity"])
def test_fast_checks_pass(name):
    report = run_checks([name], seed=3)
    assert report["passed"], report["checks"][name]


def test_sign_flip_in_fokker_planck_is_caught(flipped_fp_sign):
    report = run_checks(["entropy_production"], seed=0)
    assert "entropy_production" in report["failures"]


def test_broken_quadrature_weight_is_caught(broken_quadrature):
    report = run_checks(["quadrature", "maxent"], seed=0)
    assert "quadrature" in report["failures"]


def test_empty_selection_passes_with_warning():
    report = run_checks([], seed=0)
    assert report["passed"] and report["warnings"]


def test_unknown_check_rejected():
    with pytest.raises(KeyError):
        run_checks(["nope"])


def test_exceptions_count_as_failures(monkeypatch):
    def boom(rng):
        raise RuntimeError("boom")

    monkeypatch.setitem(CHECKS, "quadrature", boom)
    report = run_checks(["quadrature"])
    assert not report["passed"]
    assert "boom" in report["checks"]["quadrature"]["error"]


def test_reports_are_seed_deterministic():
    a = run_checks(["gateaux"], seed=5)["checks"]["gateaux"]["relative_errors"]
    b = run_checks(["gateaux"], seed=5)["checks"]["gateaux"]["relative_errors"]
    assert a == b
