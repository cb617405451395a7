import numpy as np
import pytest

from cosserat_fv import tpsa
from cosserat_fv.harness import observed_rate, run_tpsa
from cosserat_fv.material import MaterialField, sample_at_centroids
from cosserat_fv.mesh import Mesh, compute_geometry, generate_structured
from cosserat_fv.mms import case_cosserat, case_smooth
from cosserat_fv.verify import TWO_TRIANGLE_MATRIX


def two_cell_mesh(height_i, height_j):
    """Two triangles sharing the edge x = 0, 0 <= y <= 1, with given heights."""
    verts = [[0.0, 0.0], [0.0, 1.0], [-height_i, 0.5], [height_j, 0.5]]
    return Mesh.from_cells(verts, [[0, 1, 2], [0, 3, 1]])


def equilateral_mesh(n):
    """Rhombus of equilateral triangles, where centroids are circumcentres."""
    a, b = np.array([1.0, 0.0]), np.array([0.5, np.sqrt(3) / 2])
    pts = np.array([i * a / n + j * b / n for j in range(n + 1) for i in range(n + 1)])
    idx = lambda i, j: j * (n + 1) + i  # noqa: E731
    cells = []
    for j in range(n):
        for i in range(n):
            cells.append([idx(i, j), idx(i + 1, j), idx(i, j + 1)])
            cells.append([idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)])
    return Mesh.from_cells(0.9 * pts + 0.03, cells)


def shared_face(mesh):
    return int(mesh.interior_faces[0])


class TestTransmissibility:
    def test_equal_sides(self):
        mesh = two_cell_mesh(1.5, 1.5)
        geom = compute_geometry(mesh)
        tr = tpsa.build_transmissibilities(mesh, geom, MaterialField.homogeneous(2))
        k = shared_face(mesh)
        assert tr.delta_i[k] == pytest.approx(0.5) and tr.delta_j[k] == pytest.approx(0.5)
        assert (tr.xi_i[k], tr.xi_j[k]) == pytest.approx((0.5, 0.5))
        assert tr.delta[k] == pytest.approx(1.0)
        assert tr.mu_bar[k] == pytest.approx(1.0)
        # half the inverse of mu_i/delta_i + mu_j/delta_j = 2 + 2
        assert tr.delta_mu[k] == pytest.approx(0.125)

    def test_unequal_sides(self):
        mesh = two_cell_mesh(1.5, 0.75)
        geom = compute_geometry(mesh)
        tr = tpsa.build_transmissibilities(mesh, geom, MaterialField(np.array([1.0, 3.0]), np.ones(2), np.zeros(2)))
        k = shared_face(mesh)
        assert (tr.delta_i[k], tr.delta_j[k]) == pytest.approx((0.5, 0.25))
        assert (tr.xi_i[k], tr.xi_j[k]) == pytest.approx((1 / 7, 6 / 7))
        assert tr.mu_bar[k] == pytest.approx(9 / 7)
        assert tr.delta_mu[k] == pytest.approx(1 / 28)

    def test_zero_length_scale_wins_harmonic_mean(self):
        mesh = two_cell_mesh(1.5, 1.5)
        tr = tpsa.build_transmissibilities(mesh, compute_geometry(mesh),
                                           MaterialField(np.ones(2), np.ones(2), np.array([0.0, 1.0])))
        assert tr.ell2_bar[shared_face(mesh)] == 0.0

    def test_boundary_limit(self):
        mesh = two_cell_mesh(1.5, 1.5)
        tr = tpsa.build_transmissibilities(mesh, compute_geometry(mesh), MaterialField.homogeneous(2, 2.0, 1.0, 0.5))
        b = mesh.boundary_faces
        np.testing.assert_array_equal(tr.xi_i[b], 0.0)
        np.testing.assert_array_equal(tr.xi_j[b], 1.0)
        np.testing.assert_array_equal(tr.mu_bar[b], 2.0)
        np.testing.assert_array_equal(tr.delta_mu[b], 0.0)
        np.testing.assert_allclose(tr.ell2_bar[b], 0.25)


class TestStencil:
    @pytest.fixture
    def setup(self):
        mesh = two_cell_mesh(1.5, 1.5)
        geom = compute_geometry(mesh)
        tr = tpsa.build_transmissibilities(mesh, geom, MaterialField.homogeneous(2))
        return mesh, geom, tr

    def test_leading_displacement_term(self, setup):
        mesh, geom, tr = setup
        k = shared_face(mesh)
        blocks = tpsa.face_stencil(k, mesh, geom, tr)
        i, j = mesh.face_cells[k]
        h = tr.delta[k]
        np.testing.assert_allclose(blocks[i][:2, :2], -2 / h * np.eye(2) * geom.face_measure[k])
        np.testing.assert_allclose(blocks[j][:2, :2], 2 / h * np.eye(2) * geom.face_measure[k])

    def test_no_length_scale_leaves_only_coupling(self, setup):
        mesh, geom, tr = setup
        k = shared_face(mesh)
        for blk in tpsa.face_stencil(k, mesh, geom, tr).values():
            assert blk[2, 2] == 0.0
            assert np.any(blk[2, :2] != 0.0)

    def test_constant_state(self, setup, rng):
        mesh, geom, tr = setup
        c = rng.standard_normal(2)
        bi, bj = tpsa.stencil_blocks(geom, tr)
        x = np.array([c[0], c[1], 0.0, 0.0])
        flux = bi @ x + bj @ x
        np.testing.assert_allclose(flux[:, :2], 0.0, atol=1e-14)
        np.testing.assert_allclose(flux[:, 3], geom.face_measure * (geom.face_normal @ c), atol=1e-14)


class TestAssembly:
    def test_hand_computed_matrix(self, two_triangles):
        geom = compute_geometry(two_triangles)
        system = tpsa.assemble(two_triangles, geom, MaterialField.homogeneous(2, 1.0, 1.0, 0.0))
        assert system.matrix.shape == (8, 8)
        assert np.abs(system.matrix.toarray() - TWO_TRIANGLE_MATRIX).max() <= 1e-14

    def test_zero_data_zero_solution(self, two_triangles):
        geom = compute_geometry(two_triangles)
        state, rep = tpsa.solve(tpsa.assemble(two_triangles, geom, MaterialField.homogeneous(2)))
        np.testing.assert_array_equal(state.to_vector(), 0.0)

    @pytest.mark.parametrize("family", ["uniform", "crisscross", "interface_thirds"])
    def test_patch_test(self, family):
        mesh = generate_structured(6, family)
        geom = compute_geometry(mesh)
        c = np.array([0.4, -1.1])
        mat = MaterialField.homogeneous(mesh.n_cells, 1.0, 1e4, 0.3)
        system = tpsa.assemble(mesh, geom, mat, bc=tpsa.TpsaBC.constant(mesh, c))
        state, _ = tpsa.solve(system)
        np.testing.assert_allclose(state.u, np.tile(c, (mesh.n_cells, 1)), atol=1e-10)
        np.testing.assert_allclose(state.r, 0.0, atol=1e-10)
        np.testing.assert_allclose(state.p, 0.0, atol=1e-10)
        flux = tpsa.reconstruct_fluxes(system, state)
        np.testing.assert_allclose(flux.sigma, 0.0, atol=1e-10)
        np.testing.assert_allclose(flux.v, geom.face_measure * (geom.face_normal @ c), atol=1e-10)

    def test_incompressible_lambda_is_exact_zero(self, two_triangles):
        geom = compute_geometry(two_triangles)
        a = tpsa.assemble(two_triangles, geom, MaterialField.homogeneous(2, 1.0, np.inf)).matrix.toarray()
        b = tpsa.assemble(two_triangles, geom, MaterialField.homogeneous(2, 1.0, 1.0)).matrix.toarray()
        assert a[3, 3] - b[3, 3] == pytest.approx(0.5)

    def test_zero_state_zero_flux(self, two_triangles):
        geom = compute_geometry(two_triangles)
        system = tpsa.assemble(two_triangles, geom, MaterialField.homogeneous(2))
        flux = tpsa.reconstruct_fluxes(system, tpsa.TpsaState.from_vector(np.zeros(8)))
        assert not flux.sigma.any() and not flux.tau.any() and not flux.v.any()

    def test_solved_state_balances_momentum(self, rng):
        mesh = generate_structured(5, "crisscross")
        geom = compute_geometry(mesh)
        mat = MaterialField.homogeneous(mesh.n_cells, 1.0, 10.0, 0.2)
        f = rng.standard_normal((mesh.n_cells, 2))
        system = tpsa.assemble(mesh, geom, mat, f=f)
        state, _ = tpsa.solve(system)
        bal = tpsa.cell_balance(mesh, geom, tpsa.reconstruct_fluxes(system, state))
        assert np.abs(bal + geom.cell_volume[:, None] * f).max() <= 1e-9

    def test_dofs(self, two_triangles):
        assert tpsa.dof_count(two_triangles) == 8

    def test_iterative_solver_rejected(self, two_triangles):
        system = tpsa.assemble(two_triangles, compute_geometry(two_triangles), MaterialField.homogeneous(2))
        with pytest.raises(ValueError):
            tpsa.solve(system, "iterative")


class TestConvergenceOnCircumcentricMeshes:
    """Second order where the centroid-to-centroid segment is orthogonal to each face."""

    @pytest.mark.parametrize("case", [case_smooth(10.0), case_smooth(1e8), case_cosserat()],
                             ids=["lambda=10", "lambda=1e8", "cosserat"])
    def test_equilateral_rates(self, case):
        meshes = [equilateral_mesh(n) for n in (8, 16, 32)]
        res = [run_tpsa(m, case) for m in meshes]
        rate = observed_rate(res[-2]["e_u"], res[-1]["e_u"], meshes[-2].h_max(), meshes[-1].h_max())
        assert rate >= 1.8

    def test_acute_family_converges(self):
        case = case_smooth(10.0)
        meshes = [generate_structured(n, "acute") for n in (2, 4, 8)]
        errs = [run_tpsa(m, case)["e_u"] for m in meshes]
        assert errs[0] > errs[1] > errs[2]
        assert observed_rate(errs[1], errs[2], meshes[1].h_max(), meshes[2].h_max()) >= 0.7
