import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import sparse

from femfct import (
    ErrorReport,
    LimiterMatrix,
    build_friedrichs_keller,
    dh_seminorm,
    eoc,
    fct_norm,
    h1_seminorm_error,
    l2_error,
    load_mesh,
    time_integrate,
)


def interpolate(mesh, func):
    return func(mesh.nodes[:, 0], mesh.nodes[:, 1])


def dense_l2_oracle(mesh, u_h, func, n_sub=200):
    """L2 error by midpoint sampling on a fine sub-triangulation."""
    total = 0.0
    for tri, area in zip(mesh.triangles, mesh.areas()):
        p = mesh.nodes[tri]
        vals = u_h[tri]
        k = np.arange(n_sub)
        # barycentric midpoints of the n_sub^2 congruent subtriangles
        pts = []
        for a in range(n_sub):
            for b in range(n_sub - a):
                pts.append(((a + 1.0 / 3.0), (b + 1.0 / 3.0)))
                if a + b < n_sub - 1:
                    pts.append(((a + 2.0 / 3.0), (b + 2.0 / 3.0)))
        lam = np.array(pts) / n_sub
        l1, l2 = lam[:, 0], lam[:, 1]
        l0 = 1.0 - l1 - l2
        x = l0 * p[0, 0] + l1 * p[1, 0] + l2 * p[2, 0]
        y = l0 * p[0, 1] + l1 * p[1, 1] + l2 * p[2, 1]
        uh = l0 * vals[0] + l1 * vals[1] + l2 * vals[2]
        diff = func(x, y) - uh
        total += area / len(pts) * np.sum(diff * diff)
    return math.sqrt(total)


class TestL2Error:
    def test_linear_exact(self, fk1):
        u_h = interpolate(fk1, lambda x, y: 2.0 * x - y + 0.5)
        err = l2_error(fk1, u_h, lambda t, x, y: 2.0 * x - y + 0.5, t=0.0)
        assert err < 1e-14

    def test_constant_one(self, fk1):
        err = l2_error(fk1, np.zeros(fk1.n_nodes), lambda t, x, y: np.ones_like(x), t=0.0)
        assert err == pytest.approx(1.0, abs=1e-14)

    def test_quadratic_matches_dense_oracle(self, tmp_path):
        path = tmp_path / "ref.msh"
        path.write_text("3 1\n0 0\n1 0\n0 1\n0 1 2\n")
        mesh = load_mesh(path)
        u_h = interpolate(mesh, lambda x, y: x**2)
        err = l2_error(mesh, u_h, lambda t, x, y: x**2, t=0.0)
        oracle = dense_l2_oracle(mesh, u_h, lambda x, y: x**2)
        assert err == pytest.approx(oracle, abs=1e-6)


class TestH1Error:
    def test_linear_exact(self, fk1):
        u_h = interpolate(fk1, lambda x, y: 3.0 * x + y)
        err = h1_seminorm_error(
            fk1, u_h, lambda t, x, y: (np.full_like(x, 3.0), np.ones_like(x)), t=0.0
        )
        assert err < 1e-13

    def test_zero_field_unit_gradient(self, fk1):
        err = h1_seminorm_error(
            fk1,
            np.zeros(fk1.n_nodes),
            lambda t, x, y: (np.ones_like(x), np.zeros_like(x)),
            t=0.0,
        )
        assert err == pytest.approx(1.0, abs=1e-14)

    def test_quadratic_oracle(self, fk2):
        # grad(x^2) = (2x, 0); P1 gradient is piecewise constant; the
        # elementwise error integral can be computed exactly by hand:
        # on each element, e_x = 2x - (x_l + x_r) with zero mean, and
        # int (2x - 2xbar)^2 over a cell pair of width h is h^4/3 per cell
        u_h = interpolate(fk2, lambda x, y: x**2)
        err = h1_seminorm_error(
            fk2, u_h, lambda t, x, y: (2.0 * x, np.zeros_like(x)), t=0.0
        )
        h = fk2.h
        exact = math.sqrt(h * h / 3.0)
        assert err == pytest.approx(exact, rel=1e-12)


class TestDhSeminorm:
    def toy(self, alpha_value):
        alpha = LimiterMatrix(2, np.array([0]), np.array([1]), np.array([alpha_value]))
        diff = sparse.csr_matrix(np.array([[1.0, -1.0], [-1.0, 1.0]]))
        return alpha, diff

    def test_zero_error(self):
        alpha, diff = self.toy(0.0)
        assert dh_seminorm(alpha, diff, np.zeros(2)) == 0.0

    def test_alpha_one_vanishes(self):
        alpha, diff = self.toy(1.0)
        assert dh_seminorm(alpha, diff, np.array([0.0, 1.0])) == 0.0

    def test_two_node_value(self):
        # sum over unordered pairs of (1 - alpha)|d_ij| (e_j - e_i)^2
        alpha, diff = self.toy(0.0)
        assert dh_seminorm(alpha, diff, np.array([0.0, 1.0])) == pytest.approx(1.0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=2**31 - 1))
    def test_nodal_edge_equivalence_random(self, seed):
        # the ordered nodal double sum sum_{i,j}(1-a_ij) d_ij (e_j-e_i) e_i
        # equals the edge form computed by dh_seminorm
        rng = np.random.default_rng(seed)
        n = 7
        i, j = np.triu_indices(n, k=1)
        d_off = -rng.random(i.size)
        dense = np.zeros((n, n))
        dense[i, j] = d_off
        dense[j, i] = d_off
        np.fill_diagonal(dense, -dense.sum(axis=1))
        a_vals = rng.random(i.size)
        alpha = LimiterMatrix(n, i, j, a_vals)
        e = rng.standard_normal(n)
        a_full = np.zeros((n, n))
        a_full[i, j] = a_vals
        a_full[j, i] = a_vals
        nodal = sum(
            (1.0 - a_full[p, q]) * dense[p, q] * (e[q] - e[p]) * e[p]
            for p in range(n)
            for q in range(n)
            if p != q
        )
        edge = dh_seminorm(alpha, sparse.csr_matrix(dense), e)
        assert edge**2 == pytest.approx(nodal, rel=1e-10, abs=1e-12)


class TestFctNorm:
    def test_zero_error(self, fk1):
        i, j = np.triu_indices(2, k=1)
        alpha = LimiterMatrix(2, i, j, np.ones(1))
        diff = sparse.csr_matrix(np.array([[1.0, -1.0], [-1.0, 1.0]]))
        assert (
            fct_norm(fk1, np.zeros(fk1.n_nodes), alpha, diff, eps=1.0, c0=1.0) == 0.0
        )

    def test_alpha_one_reduces_to_energy_norm(self, fk1):
        rng = np.random.default_rng(1)
        e = rng.standard_normal(fk1.n_nodes)
        i, j = np.triu_indices(fk1.n_nodes, k=1)
        # alpha = 1 on an arbitrary pattern: d_h term drops out
        alpha = LimiterMatrix(fk1.n_nodes, i[:3], j[:3], np.ones(3))
        dense = np.zeros((fk1.n_nodes, fk1.n_nodes))
        dense[i[:3], j[:3]] = -1.0
        dense[j[:3], i[:3]] = -1.0
        np.fill_diagonal(dense, -dense.sum(axis=1))
        diff = sparse.csr_matrix(dense)
        full = fct_norm(fk1, e, alpha, diff, eps=2.0, c0=3.0)
        import femfct.errors as err_mod

        ws = err_mod.ErrorWorkspace(fk1)
        expected = math.sqrt(2.0 * ws.h1_nodal(e) ** 2 + 3.0 * ws.l2_nodal(e) ** 2)
        assert full == pytest.approx(expected, rel=1e-13)

    def test_decomposition_identity_random(self):
        # ||e||_fct^2 = eps |e|_1^2 + c0 ||e||_0^2 + d_h(e, e)
        import femfct.errors as err_mod

        mesh = build_friedrichs_keller(1)
        ws = err_mod.ErrorWorkspace(mesh)
        rng = np.random.default_rng(42)
        i, j = np.triu_indices(mesh.n_nodes, k=1)
        keep = rng.random(i.size) < 0.1
        i, j = i[keep], j[keep]
        for _ in range(100):
            e = rng.standard_normal(mesh.n_nodes)
            a_vals = rng.random(i.size)
            alpha = LimiterMatrix(mesh.n_nodes, i, j, a_vals)
            d_off = -rng.random(i.size)
            dense = np.zeros((mesh.n_nodes, mesh.n_nodes))
            dense[i, j] = d_off
            dense[j, i] = d_off
            np.fill_diagonal(dense, -dense.sum(axis=1))
            diff = sparse.csr_matrix(dense)
            eps, c0 = rng.random() + 0.1, rng.random() + 0.1
            total = fct_norm(mesh, e, alpha, diff, eps=eps, c0=c0) ** 2
            parts = (
                eps * ws.h1_nodal(e) ** 2
                + c0 * ws.l2_nodal(e) ** 2
                + dh_seminorm(alpha, diff, e) ** 2
            )
            assert abs(total - parts) <= 1e-12 * max(total, 1.0)


class TestTimeIntegrate:
    def test_constant_series(self):
        assert time_integrate(np.full(10, 3.0), tau=0.1) == pytest.approx(3.0)

    def test_single_step(self):
        assert time_integrate([4.0], tau=0.25) == pytest.approx(4.0 * 0.5)

    def test_three_four_five(self):
        assert time_integrate([3.0, 4.0], tau=1.0) == pytest.approx(5.0)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(min_value=1e-3, max_value=1e3))
    def test_scaling_homogeneity(self, scale):
        vals = np.array([1.0, 2.0, 0.5])
        assert time_integrate(scale * vals, tau=0.1) == pytest.approx(
            scale * time_integrate(vals, tau=0.1), rel=1e-12
        )


class TestEoc:
    def test_halving(self):
        assert eoc([0.1, 0.025], [0.5, 0.25]) == [pytest.approx(2.0)]

    def test_stagnation(self):
        assert eoc([0.1, 0.1], [0.5, 0.25]) == [pytest.approx(0.0)]

    def test_reference_convergence_column(self):
        errors = [0.0288, 0.00777, 0.00153, 0.000479, 0.000116]
        hs = [2.0 ** (-k) for k in range(2, 7)]
        rates = eoc(errors, hs)
        np.testing.assert_allclose(rates, [1.890, 2.342, 1.676, 2.046], atol=5e-3)

    def test_nonpositive_error_gives_none(self):
        assert eoc([0.1, 0.0], [0.5, 0.25]) == [None]


class TestErrorReport:
    def test_eoc_table_shape(self):
        rep = ErrorReport(
            levels=[1, 2],
            hs=[0.25, 0.125],
            err_l2l2=[0.1, 0.025],
            err_l2h1=[0.4, 0.2],
            err_l2fct=[0.2, 0.1],
            err_l2dh=[0.1, 0.05],
            wall_time_s=[1.0, 2.0],
        )
        eocs = rep.eocs()
        assert eocs["eoc_l2l2"] == [None, pytest.approx(2.0)]
        assert eocs["eoc_l2h1"] == [None, pytest.approx(1.0)]
