import math
import os
from pathlib import Path

import pytest

import relemit

CONFIGS = Path(os.environ.get("RELEMIT_CONFIG_DIR", Path(__file__).parents[2] / "configs"))


def gamma0(d):
    return d * d / (3 * math.pi)


def test_vacuum_rest_rate():
    r = relemit.decay_rate([0, 0, 0.3], mass=1e30)
    assert r["gamma"] == pytest.approx(gamma0(0.3), rel=1e-9)
    assert len(r["terms"]) == 4
    assert "lamb_shift" not in r


@pytest.mark.parametrize("beta", [0.3, 0.9])
def test_time_dilation(beta):
    r = relemit.decay_rate([0.3, 0, 0], velocity=[beta, 0, 0], mass=1e30)
    gamma = relemit.lorentz_gamma([beta, 0, 0])
    assert r["gamma"] * gamma == pytest.approx(gamma0(0.3), rel=1e-8)


def test_bulk_rate_and_quadrature_keywords():
    r = relemit.decay_rate([0, 0, 1], electric=[(0.5, 1.3, 0.2)], magnetic=[(0.2, 1.6, 0.3)],
                           k_max=4.0, n_polar=16, n_azimuthal=16)
    assert r["gamma"] > 0
    assert r["error_estimate"] < 1e-3
    with pytest.raises(KeyError):
        relemit.decay_rate([0, 0, 1], bogus=1)


def test_vacuum_lamb_shift_closed_form():
    d, cutoff = 0.2, 10.0
    r = relemit.lamb_shift([0, 0, d], mass=1e30, omega_cutoff=cutoff)
    closed = d * d / (6 * math.pi**2) * (cutoff**3 / 3 + cutoff**2 / 2 + cutoff
                                         + math.log(cutoff - 1))
    assert r["shift"] == pytest.approx(closed, rel=1e-7)


def test_kinematics_and_material():
    assert relemit.spinor_overlap_factor([0.4, 0.1, 0], [0.4, 0.1, 0]) == 2.0
    assert relemit.spinor_overlap_factor([0.5, 0, 0], [0, 0.5, 0]) == pytest.approx(1.75)
    assert relemit.permittivity([(1.0, 1.0, 0.1)], 1.0) == pytest.approx(1 + 10j)


def test_errors_map_to_exceptions():
    with pytest.raises(relemit.ValidationError):
        relemit.decay_rate([0, 0, 1], velocity=[1.2, 0, 0])
    with pytest.raises(relemit.ConfigurationError):
        relemit.lamb_shift([0, 0, 0.1], omega_cutoff=1.004)
    assert issubclass(relemit.ValidationError, relemit.RelemitError)


def test_run_config_file():
    records = relemit.run_config(CONFIGS / "vacuum_sweep.yaml")
    assert len(records) == 10
    assert all(r["ok"] for r in records)


def test_run_config_text_validation():
    with pytest.raises(relemit.ValidationError, match="atom.velocity"):
        relemit.run_config("atom:\n  velocity: [4.0e8, 0, 0]\n")
