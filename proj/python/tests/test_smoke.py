import math

import numpy as np
import pytest
import scipy.linalg

import fpca


def test_exp_skew_matches_expm():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((4, 4))
    x = a - a.T
    np.testing.assert_allclose(fpca.exp_skew(x, 0.7), scipy.linalg.expm(0.7 * x), atol=1e-12)


def test_geodesic_stays_on_manifold():
    rng = np.random.default_rng(2)
    b, _ = np.linalg.qr(rng.standard_normal((6, 3)))
    d = fpca.project_to_tangent(b, rng.standard_normal((6, 3)))
    s = b.T @ d
    np.testing.assert_allclose(s + s.T, 0, atol=1e-12)
    b1 = fpca.geodesic_step(b, d, 1.0)
    np.testing.assert_allclose(b1.T @ b1, np.eye(3), atol=1e-10)


def test_basis_is_orthonormal():
    basis = fpca.Basis(7)
    x, w = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(0, 1, 61)
    nodes = np.concatenate([(lo + hi) / 2 + (hi - lo) / 2 * x for lo, hi in zip(edges[:-1], edges[1:])])
    weights = np.concatenate([(hi - lo) / 2 * w for lo, hi in zip(edges[:-1], edges[1:])])
    phi = basis.design(nodes.tolist())
    assert phi.shape == (7, nodes.size)
    np.testing.assert_allclose((phi * weights) @ phi.T, np.eye(7), atol=1e-8)


def test_fev_prune_hybrid_eigenvalues():
    lam = np.array([1.0, 0.66, 0.52, 0.07, 0.001])
    assert fpca.fev_prune(lam, 0.95) == 3
    assert fpca.fev_prune(lam, 0.99) == 4
    assert fpca.fev_prune(lam, 0.0) == 1


def test_dataset_round_trip_and_errors():
    rows = [("a", 2.0, 1.0), ("a", 3.0, 1.5), ("b", 4.0, -0.5)]
    d = fpca.Dataset(rows)
    assert len(d) == 2 and d.num_points == 3
    assert (d.time_min, d.time_max) == (2.0, 4.0)
    assert d.rows() == rows
    assert fpca.parse_csv(d.to_csv()).rows() == rows
    with pytest.raises(fpca.DataError):
        fpca.parse_csv("subject_id,t,y\na,0.1,notanumber\n")


def test_generate_fit_and_select():
    data, truth = fpca.generate("easy", 200, 11)
    assert data.num_subjects == 200
    assert truth["schema"] == "fpca.truth/1"

    report = fpca.fit(data, 5, 3)
    assert report["schema"] == "fpca.fit/1"
    assert report["converged"]
    lam = np.array(report["eigenvalues"])
    assert np.all(lam > 0) and np.all(np.diff(lam) <= 0)
    assert abs(lam[0] - 1.0) < 0.5
    assert report["noise_variance"] > 0
    assert math.isfinite(report["approx_cv"]["total"])

    sel = fpca.select(data, [4, 5], [3], kappas=[0.95])
    assert sel["schema"] == "fpca.select/1"
    assert sel["chosen"]["M"] in (4, 5)


def test_benchmark_is_seeded():
    a = fpca.benchmark("easy", 60, 2, [5], [3], 7)
    b = fpca.benchmark("easy", 60, 2, [5], [3], 7)
    assert a["schema"] == "fpca.bench/1"
    assert a["records"] == b["records"]
