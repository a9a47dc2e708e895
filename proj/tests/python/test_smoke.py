# SPDX-License-Identifier: Apache-2.0
import json
from pathlib import Path

import numpy as np
import pytest

import ptlab

ROOT = Path(__file__).resolve().parents[2]


def test_default_model_is_damped_and_dissipative():
    m = ptlab.Model()
    assert m.damped
    assert m.size == 555
    rng = np.random.default_rng(3)
    for _ in range(20):
        u = rng.standard_normal(m.size) + 1j * rng.standard_normal(m.size)
        assert m.energy_production(u) <= 1e-10 * 2 * m.energy(u)


def test_matrix_triplets_match_size():
    m = ptlab.Model.from_json('{"grids": {"n_x": 8, "n_s": 4}}')
    rows, cols, vals = m.matrix("M")
    assert rows.shape == cols.shape == vals.shape
    dense = np.zeros((m.size, m.size))
    dense[rows, cols] = vals
    assert np.allclose(dense, dense.T)
    assert np.linalg.eigvalsh(dense).min() > 0
    with pytest.raises(ptlab.ValidationError):
        m.matrix("Q")


def test_conservative_spectrum_is_imaginary():
    m = ptlab.load_model(ROOT / "config" / "conservative.json")
    ev = m.eigenvalues()
    assert len(ev) == m.size
    assert np.abs(ev.real).max() <= 1e-8


def test_simulation_and_decay_fit():
    m = ptlab.Model.from_json('{"grids": {"n_x": 12, "n_s": 6}}')
    tr = m.simulate(T=6.0, dt=0.01)
    assert tr["steps"] == 600
    assert np.all(np.diff(tr["E"]) <= 1e-12 * tr["E"][0])
    fit = ptlab.decay_fit(tr["t"], tr["norm"], tr["initial_graph_norm"], 1.0, 6.0)
    assert fit["alpha"] > 0


def test_synthetic_decay_recovers_five_eighths():
    t = np.linspace(1.0, 20.0, 200)
    fit = ptlab.decay_fit(t, 2.0 * t**-0.625, 2.0)
    assert abs(fit["alpha"] - 0.625) <= 1e-6


def test_kernel_certificate():
    cert = ptlab.certify_kernel([(1.0, 2.0)])
    assert cert["h1_ok"] and cert["h2_ok"]
    assert cert["K_min"] == pytest.approx(2.0)
    assert cert["delta"] == pytest.approx(0.4, rel=1e-6)


def test_validation_errors_name_the_constraint():
    assert any("beta" in v for v in ptlab.param_violations({"beta": 0.0}))
    assert ptlab.param_violations({}) == []
    with pytest.raises(ptlab.ValidationError, match="beta"):
        ptlab.Model.from_json('{"params": {"beta": 0}}')
    with pytest.raises(ValueError):
        ptlab.Model.from_json('{"params": {"nope": 1}}')


def test_resolvent_scan_shape():
    m = ptlab.Model.from_json('{"grids": {"n_x": 10, "n_s": 6}}')
    scan = m.resolvent_scan(1.0, 50.0, 9)
    assert scan["lambda"].shape == (9,)
    assert np.all(scan["norm"] > 0)
    assert m.resolvent_norm(2.0) == pytest.approx(float(m.resolvent_scan(2.0, 3.0, 2)["norm"][0]))


def test_cli_in_process(tmp_path):
    code, out, err = ptlab.run(["kernel-check", "--out", str(tmp_path)])
    assert code == 0, err
    assert out.count("\n") == 1
    cert = json.loads((tmp_path / "kernel_certificate.json").read_text())
    assert cert["K_min"] == pytest.approx(1.0)
    code, _, err = ptlab.run(["simulate"], {"PTL_PARAMS__BETA": "0"})
    assert code == 1 and "beta" in err


def test_schema_matches_committed_file():
    assert ptlab.config_schema() == (ROOT / "config" / "schema.json").read_text()
