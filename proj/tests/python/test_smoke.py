import math

import numpy as np
import pytest

import lakesim


def test_disk_poisson_second_order():
    errors = []
    for n in (32, 64):
        d = lakesim.Domain.disk(resolution=n)
        xy = d.centers()
        h = lakesim.solve_dirichlet(d, np.ones(d.num_active))
        exact = 0.25 * (1.0 - (xy**2).sum(axis=1))
        errors.append(np.abs(h - exact).max())
    assert 3.2 <= errors[0] / errors[1] <= 4.8


def test_neumann_linear_on_square():
    d = lakesim.Domain.rectangle(resolution=32)
    a = d.node_normals()[:, 0]
    H = lakesim.solve_neumann(d, np.zeros(d.num_active), a)
    x = d.centers()[:, 0]
    assert np.abs(H - (x - x.mean())).max() < 1e-8


def test_incompatible_neumann_rejected():
    d = lakesim.Domain.disk(resolution=32)
    with pytest.raises(lakesim.CompatibilityError):
        lakesim.solve_neumann(d, np.zeros(d.num_active), np.ones(d.num_nodes))


def test_disk_curvature_and_shape_errors():
    d = lakesim.Domain.disk(radius=0.5, resolution=48)
    assert np.allclose(d.curvature(), 2.0)
    assert d.perimeter == pytest.approx(math.pi, rel=1e-3)
    with pytest.raises(ValueError):
        lakesim.solve_dirichlet(d, np.ones(3))


def test_weighted_norm_constant():
    d = lakesim.Domain.rectangle(resolution=16)
    w = np.full(d.num_active, 2.0)
    b = np.full(d.num_active, 3.0)
    assert lakesim.weighted_lp_norm(d, w, b, 2.0) == pytest.approx(2.0 * math.sqrt(3.0))


def test_exponent_table_hoelder():
    for p in (1.5, 2.0, 3.0, 7.0):
        t = lakesim.exponent_table(p, 0.5)
        assert abs(t["holder_sum"] - 1.0) < 1e-12


def test_gronwall_bound_examples():
    times = [0.01 * k for k in range(101)]
    zero = [0.0] * 101
    assert lakesim.discrete_gronwall_bound(0.5, times, zero, zero, 0.1) == pytest.approx([1.0] * 101)
    with pytest.raises(Exception):
        lakesim.discrete_gronwall_bound(0.5, times, [-1.0] * 101, zero, 0.1)


def test_run_config_friction_decay():
    text = "[domain]\nshape = disk\nresolution = 24\n[data]\nkappa = 1\nomega0 = 1.5\n[solver]\nT = 0.2\ndt = 0.01\n"
    out = lakesim.run_config(text)
    assert out["complete"]
    assert out["times"][-1] == pytest.approx(0.2)
    final = out["omega"][-1]
    assert np.abs(final - 1.5 * math.exp(-0.2)).max() < 5e-3
    assert out["hash"] == lakesim.fnv1a_hex(text)


def test_config_error():
    with pytest.raises(lakesim.ConfigError):
        lakesim.run_config("[domain]\nshape = disk\nbogus = 1\n")


def test_fnv1a_reference():
    assert lakesim.fnv1a_hex("") == "cbf29ce484222325"
