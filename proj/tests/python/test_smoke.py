"""Smoke tests for the snacpy bindings."""

import json
import math
import os
import subprocess
import tempfile

import numpy as np
import pytest

import snacpy


def test_mahalanobis_thresholds():
    assert snacpy.mahalanobis_threshold(0.001, 1) == pytest.approx(3.291, abs=5e-4)
    assert snacpy.mahalanobis_threshold(0.001, 2) == pytest.approx(3.717, abs=5e-4)


def test_mahalanobis_euclidean_case():
    m = snacpy.mahalanobis(
        np.array([3.0, 4.0]), np.zeros(2), np.eye(2))
    assert m == pytest.approx(5.0)


def test_projection_boresight_hits_principal_point():
    calib = np.array([[2500.0, 0.0, 512.0],
                      [0.0, 2500.0, 512.0],
                      [0.0, 0.0, 1.0]])
    rot = np.eye(3)
    pos = np.array([0.0, 0.0, -45000.0])
    u, v = snacpy.project(calib, rot, pos, np.array([0.0, 0.0, 0.0]))
    assert u == pytest.approx(512.0)
    assert v == pytest.approx(512.0)


def test_normalization_factor():
    assert snacpy.sh_normalization(2, 2) == pytest.approx(math.sqrt(2.4))


def test_point_mass_gravity():
    pos = np.array([45000.0, 0.0, 0.0])
    mu = 4.4628e5
    a = snacpy.gravity_accel(mu, 16000.0, 2,
                             np.zeros(3), np.zeros(2), pos)
    assert np.allclose(a, -mu / 45000.0**2 * np.array([1.0, 0.0, 0.0]))


def test_clock_process_noise_value():
    q = snacpy.clock_process_noise(6.2e-21, 1.2e-27, 300.0)
    assert q[0, 0] == pytest.approx(1.8708e-18, rel=1e-4)


def test_allan_fit_exact():
    q1, q2 = 3e-20, 5e-26
    samples = [(tau, q1 / tau + q2 * tau / 3.0)
               for tau in (1.0, 10.0, 100.0, 1000.0)]
    f1, f2 = snacpy.allan_variance_fit(samples)
    assert f1 == pytest.approx(q1, rel=1e-9)
    assert f2 == pytest.approx(q2, rel=1e-9)


def test_triangulation_round_trip():
    calib = np.array([[2500.0, 0.0, 512.0],
                      [0.0, 2500.0, 512.0],
                      [0.0, 0.0, 1.0]])
    target = np.array([7000.0, 500.0, 200.0])
    rotations, positions, pixels = [], [], []
    for phase in (-0.2, 0.0, 0.2):
        pos = 45000.0 * np.array([math.cos(phase), math.sin(phase), 0.0])
        z = -pos / np.linalg.norm(pos)
        y = np.array([0.0, 0.0, 1.0])
        x = np.cross(y, z)
        x /= np.linalg.norm(x)
        rot = np.vstack([x, np.cross(z, x), z])
        u, v = snacpy.project(calib, rot, pos, target)
        rotations.append(rot)
        positions.append(pos)
        pixels.append((u, v))
    got = snacpy.triangulate([calib] * 3, rotations, positions, pixels)
    assert np.linalg.norm(got - target) < 1e-6


def test_shape_fit_recovers_synthetic_body():
    coeffs = snacpy.generate_body_shape(42, 6, 8000.0, 1.84)
    rng = np.random.default_rng(7)
    landmarks, covs = [], []
    for _ in range(400):
        lon = rng.uniform(0, 2 * math.pi)
        lat = math.asin(rng.uniform(-1, 1))
        r = snacpy.evaluate_shape(6, coeffs, lon, lat)
        p = r * np.array([math.cos(lat) * math.cos(lon),
                          math.cos(lat) * math.sin(lon),
                          math.sin(lat)])
        landmarks.append(p + rng.normal(0, 5.0, 3))
        covs.append(25.0 * np.eye(3))
    fit = snacpy.fit_shape(landmarks, covs, 6, 1.84)
    assert fit["nu"] > 0
    err = np.asarray(fit["coefficients"]) - np.asarray(coeffs)
    assert np.abs(err).max() < 20.0


def test_zero_duration_scenario():
    cfg = json.loads(snacpy.default_config_json())
    cfg["duration_orbits"] = 0.0
    cfg["features"]["count"] = 10
    cfg["name"] = "pysmoke"
    with tempfile.TemporaryDirectory() as tmp:
        out = snacpy.run_scenario(json.dumps(cfg), os.path.join(tmp, "run"))
        assert out["epochs"] == 0


def test_cli_selftest():
    cli = os.environ.get("SNAC_CLI")
    if not cli or not os.path.exists(cli):
        pytest.skip("SNAC_CLI not provided")
    proc = subprocess.run([cli, "selftest"], capture_output=True, text=True,
                          cwd=tempfile.mkdtemp())
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "selftest passed" in proc.stdout
