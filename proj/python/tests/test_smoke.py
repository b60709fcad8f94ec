import math

import numpy as np
import pytest

import greenmap as gm


def test_disk_identity():
    field = gm.solve(gm.Domain.circle([0, 0], 1.0), [0, 0])
    assert field.backend == "analytic-disk"
    r = gm.map_point(field, [0.5, 0.0])
    assert np.allclose(r["image"], [0.5, 0.0], atol=1e-12)
    assert r["local_scale"] == pytest.approx(1.0)


def test_mobius_modulus_with_mfs():
    field = gm.solve(gm.Domain.circle([0, 0], 1.0), [0.3, 0.0], force_mfs=True)
    assert field.backend == "mfs"
    z, y = complex(-0.4, 0.5), 0.3
    expected = abs((z - y) / (1 - y * z))
    r = gm.map_point(field, [z.real, z.imag])
    assert np.linalg.norm(r["image"]) == pytest.approx(expected, abs=1e-6)
    w = r["image"]
    assert np.allclose(gm.inverse_map(field, w), [z.real, z.imag], atol=1e-6)


def test_ball_weighted_length():
    field = gm.solve(gm.Domain.sphere([0, 0, 0], 1.0), [0, 0, 0])
    tr = gm.trace(field, [0.5, 0.0, 0.0])
    assert tr["weighted_length"] == pytest.approx(math.log(2.0), abs=1e-6)
    assert max(abs(v) for v in tr["level_residual"]) <= 1e-8


def test_map_grid_arrays():
    domain = gm.Domain.fourier_curve([0, 0], 1.0, [0, 0, 0.1])
    field = gm.solve(domain, [0, 0])
    pts = gm.polar_grid(domain, 4, 8)
    out = gm.map_grid(field, np.vstack([pts, [[3.0, 0.0]]]), jobs=2)
    assert out["images"].shape == (33, 2)
    assert all(out["ok"][:32]) and not out["ok"][32]
    assert np.isnan(out["images"][32]).all()
    assert (np.linalg.norm(out["images"][:32], axis=1) < 1).all()


def test_metric_classification():
    assert gm.classify(np.diag([1.0, 2.0, 4.0]), 1e-6) == "weak-conformal"
    assert gm.classify(np.diag([1.0, 1.0, 4.0]), 1e-6) == "quasi-conformal(2)"
    assert gm.conformal_residual(np.diag([1.0, 1.0, 4.0])) == pytest.approx(0.5)
    assert gm.dilatation(np.diag([1.0, 4.0, 16.0])) == pytest.approx(4.0)
    jac = gm.numeric_jacobian(lambda x: [v / sum(c * c for c in x) for v in x], [1.0, 1.0, 1.0])
    assert np.allclose(jac, (np.ones((3, 3)) * -2 + np.eye(3) * 3) / 9, atol=1e-9)
    rep = gm.metric_report(jac, 1e-6)
    assert rep["classification"] == "conformal"
    with pytest.raises(gm.ArgumentError):
        gm.conformal_residual(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_constructed_map_is_conformal():
    field = gm.solve(gm.Domain.fourier_curve([0, 0], 1.0, [0, 0, 0.1]), [0, 0])
    rep = gm.metric_report_at(field, [0.3, 0.2])
    assert rep["conformal_residual"] < 1e-6


def test_lemma3_example():
    rep = gm.lemma3_check(lambda x: x[0], [0.0, 0.0], 1.0)
    assert rep["margin"] == pytest.approx(0.5, abs=1e-5)
    assert rep["passed"]


def test_scans():
    assert gm.annulus_scan()["min_grad"] < 1e-3
    field = gm.solve(gm.Domain.circle([0, 0], 1.0), [0, 0])
    grid = gm.polar_grid(field.domain, 16, 16)
    assert gm.critical_point_scan(field, grid)["min_grad"] == pytest.approx(1 / (2 * math.pi * 0.99))


def test_flux_and_json():
    field = gm.solve(gm.Domain.sphere([0, 0, 0], 1.0), [0, 0, 0])
    assert gm.flux_through_patch(field, [0, 0, 1], math.pi, 0.5) == pytest.approx(0.25, abs=1e-6)
    assert field.boundary_flux_total() == pytest.approx(-1.0, abs=1e-6)
    again = gm.GreenField.from_json(field.to_json())
    assert again.value([0.1, 0.2, 0.3]) == field.value([0.1, 0.2, 0.3])
    with pytest.raises(gm.ParseError):
        gm.Domain.from_json('{"dim": 2, "kind": "circle", "center": [0, 0], "radius": 1, "x": 1}')


def test_errors():
    with pytest.raises(gm.DomainError):
        gm.solve(gm.Domain.circle([0, 0], 1.0), [2.0, 0.0])
    field = gm.solve(gm.Domain.circle([0, 0], 1.0), [0, 0])
    with pytest.raises(gm.DomainError):
        gm.map_point(field, [1.5, 0.0])
    assert issubclass(gm.DomainError, gm.GreenmapError)


def test_cli(tmp_path):
    cfg = tmp_path / "disk.json"
    cfg.write_text('{"domain": {"dim": 2, "kind": "circle", "center": [0, 0], "radius": 1}, "pole": [0, 0]}')
    code, out, err = gm.run_cli(["green", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0, err
    assert (tmp_path / "field.json").exists()
    assert gm.run_cli(["nonsense"])[0] == 1
