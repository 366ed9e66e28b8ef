import numpy as np
import pytest

from phdisk import (
    BoundaryFunction,
    Cone,
    GridFunction,
    MaskedValueError,
    area_integral,
    boundary_trace,
    circle_norm,
    hardy_norm,
    make_grid,
    nontangential_max,
    sobolev_norm,
    wirtinger_derivatives,
)


class TestMakeGrid:
    def test_small_grid_nodes(self):
        g = make_grid(8, 4)
        assert g.n_theta * g.n_r == 32
        assert np.allclose(g.radii, [0.25, 0.5, 0.75, 1.0])
        assert g.boundary_ring_index == 3

    def test_reference_resolution(self):
        g = make_grid(256, 256)
        assert g.radii[0] > 0 and g.radii[-1] == 1.0
        assert np.all(np.diff(g.radii) > 0)

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError, match="power of two"):
            make_grid(6, 4)

    def test_rejects_tiny_radial_count(self):
        with pytest.raises(ValueError):
            make_grid(8, 3)


class TestQuadrature:
    @pytest.mark.parametrize("a", [0, 1, 2])
    def test_radial_moments_exact(self, grid256, a):
        z = grid256.nodes_z()
        f = GridFunction(grid256, (np.abs(z) ** a).astype(complex))
        exact = 2 * np.pi / (a + 2)
        assert abs(area_integral(f).real - exact) <= 1e-10 * exact

    @pytest.mark.parametrize("n", [1, 2, 7, 32, 127])
    def test_angular_modes_vanish(self, grid256, n):
        z = grid256.nodes_z()
        f = GridFunction(grid256, np.abs(z) * np.exp(1j * n * np.angle(z)))
        assert abs(area_integral(f)) <= 1e-12

    def test_trig_times_polynomial(self, grid256):
        # degree-2 radial polynomial times a mid-band harmonic
        z = grid256.nodes_z()
        r = np.abs(z)
        f = GridFunction(grid256, (1 + 2 * r - 0.5 * r**2).astype(complex))
        exact = 2 * np.pi * (1 / 2 + 2 / 3 - 0.5 / 4)
        assert abs(area_integral(f).real - exact) <= 1e-12 * exact

    def test_area_examples(self, grid256):
        z = grid256.nodes_z()
        assert abs(area_integral(GridFunction.constant(grid256, 1.0)) - np.pi) < 1e-12
        assert abs(area_integral(GridFunction(grid256, z))) < 1e-12
        f = GridFunction(grid256, (np.abs(z) ** 2).astype(complex))
        assert abs(area_integral(f).real - np.pi / 2) < 1e-12

    def test_masked_integral_raises(self, grid256):
        vals = np.ones((grid256.n_r, grid256.n_theta), dtype=complex)
        vals[10, 10] = np.inf
        f = GridFunction(grid256, vals)
        with pytest.raises(MaskedValueError):
            area_integral(f)

    def test_parseval_every_radius(self, grid256):
        rng = np.random.default_rng(0)
        vals = rng.standard_normal((grid256.n_r, grid256.n_theta)) + 1j * rng.standard_normal(
            (grid256.n_r, grid256.n_theta)
        )
        f = GridFunction(grid256, vals)
        modes = f.angular_modes()
        lhs = np.sum(np.abs(vals) ** 2, axis=1) * 2 * np.pi / grid256.n_theta
        rhs = 2 * np.pi * np.sum(np.abs(modes) ** 2, axis=1)
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(lhs)


class TestCircleAndHardy:
    def test_constant_on_unit_circle(self, grid256):
        f = GridFunction.constant(grid256, 1.0)
        assert abs(circle_norm(f, 1.0, 2.0) - np.sqrt(2 * np.pi)) < 1e-12

    def test_arclength_of_half_circle(self, grid256):
        f = GridFunction.constant(grid256, 1.0)
        assert abs(circle_norm(f, 0.5, 1.0) - np.pi) < 1e-12

    @pytest.mark.parametrize("n,p", [(1, 2.0), (3, 1.5), (5, 4.0)])
    def test_monomial_closed_form(self, grid256, n, p):
        z = grid256.nodes_z()
        f = GridFunction(grid256, z**n)
        rho = grid256.radii[100]
        expected = (2 * np.pi * rho) ** (1.0 / p) * rho**n
        assert abs(circle_norm(f, rho, p) - expected) < 1e-12

    def test_off_grid_radius_raises(self, grid256):
        f = GridFunction.constant(grid256, 1.0)
        with pytest.raises(ValueError, match="not a grid radius"):
            circle_norm(f, 0.12345, 2.0)

    def test_hardy_norm_monomial(self, grid256):
        z = grid256.nodes_z()
        n = 3
        f = GridFunction(grid256, z**n)
        r_max = grid256.radii[-2]
        expected = np.sqrt(2 * np.pi * r_max) * r_max**n
        assert abs(hardy_norm(f, 2.0) - expected) < 1e-12

    def test_hardy_norm_zero(self, grid256):
        assert hardy_norm(GridFunction.zeros(grid256), 2.0) == 0.0

    def test_circle_norm_monotone_for_holomorphic(self, grid256):
        z = grid256.nodes_z()
        f = GridFunction(grid256, z**4)
        norms = [circle_norm(f, rho, 2.0) for rho in grid256.radii[::16]]
        assert np.all(np.diff(norms) >= 0)

    def test_hardy_counterexample_stable_under_doubling(self):
        # the G^2 member with log-singular boundary point stays bounded
        def w_exw(z):
            t = np.abs(z - 1.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                return 1.0 / (np.log(3.0 / t) * np.sqrt(z - 1.0))

        vals = []
        for n_r in (128, 256):
            g = make_grid(256, n_r)
            vals.append(hardy_norm(GridFunction.from_function(g, w_exw), 2.0))
        assert np.isfinite(vals).all()
        assert abs(vals[1] - vals[0]) <= 0.05 * vals[0]


class TestWirtinger:
    def test_holomorphic_monomial(self, grid256):
        z = grid256.nodes_z()
        d, dbar = wirtinger_derivatives(GridFunction(grid256, z))
        assert np.max(np.abs(d.values - 1)) < 1e-10
        assert np.max(np.abs(dbar.values)) < 1e-10

    def test_antiholomorphic(self, grid256):
        z = grid256.nodes_z()
        d, dbar = wirtinger_derivatives(GridFunction(grid256, np.conj(z)))
        assert np.max(np.abs(d.values)) < 1e-10
        assert np.max(np.abs(dbar.values - 1)) < 1e-10

    def test_modulus_squared(self, grid256):
        z = grid256.nodes_z()
        d, dbar = wirtinger_derivatives(GridFunction(grid256, (np.abs(z) ** 2).astype(complex)))
        assert np.max(np.abs(d.values - np.conj(z))) < 1e-10
        assert np.max(np.abs(dbar.values - z)) < 1e-10

    @pytest.mark.parametrize("m,n", [(2, 1), (3, 2), (0, 5), (4, 1), (1, 4)])
    def test_mixed_monomials(self, grid256, m, n):
        z = grid256.nodes_z()
        f = GridFunction(grid256, z**m * np.conj(z) ** n)
        d, dbar = wirtinger_derivatives(f)
        K = int(0.9 * grid256.n_r)
        expect_d = m * z ** max(m - 1, 0) * np.conj(z) ** n if m else 0 * z
        expect_db = n * z**m * np.conj(z) ** max(n - 1, 0) if n else 0 * z
        assert np.max(np.abs(d.values - expect_d)[:K]) < 1e-8
        assert np.max(np.abs(dbar.values - expect_db)[:K]) < 1e-8


class TestSobolev:
    def test_constant(self, grid256):
        assert abs(sobolev_norm(GridFunction.constant(grid256, 1.0), 2.0) - np.sqrt(np.pi)) < 1e-9

    @pytest.mark.parametrize("conjugate", [False, True])
    def test_linear(self, grid256, conjugate):
        z = grid256.nodes_z()
        f = GridFunction(grid256, np.conj(z) if conjugate else z)
        expected = np.sqrt(np.pi / 2) + np.sqrt(np.pi)
        assert abs(sobolev_norm(f, 2.0) - expected) < 1e-9


class TestBoundaryTrace:
    def test_identity_trace(self, grid256):
        z = grid256.nodes_z()
        tr = boundary_trace(GridFunction(grid256, z))
        assert np.max(np.abs(tr.values - np.exp(1j * grid256.thetas))) < 1e-14

    def test_modulus_trace(self, grid256):
        z = grid256.nodes_z()
        tr = boundary_trace(GridFunction(grid256, (np.abs(z) ** 2).astype(complex)))
        assert np.max(np.abs(tr.values - 1)) < 1e-14

    def test_singular_node_propagates_mask(self, grid256):
        f = GridFunction.from_function(
            grid256, lambda z: np.log(np.log(3.0 / np.abs(z - 1.0)))
        )
        tr = boundary_trace(f)
        assert tr.mask is not None and tr.mask[0]
        th = grid256.thetas[5]
        expected = np.log(np.log(3.0 / abs(np.exp(1j * th) - 1.0)))
        assert abs(tr.values[5] - expected) < 1e-12


class TestNontangentialMax:
    def test_constant(self, grid128):
        M = nontangential_max(GridFunction.constant(grid128, -2.5), np.pi / 4)
        assert np.max(np.abs(M.values - 2.5)) < 1e-14

    def test_identity_function(self, grid128):
        z = grid128.nodes_z()
        M = nontangential_max(GridFunction(grid128, z), np.pi / 4)
        r_max = grid128.radii[-2]
        assert np.max(np.abs(M.values - r_max)) < 1e-14

    def test_poisson_cosine_vs_dense_oracle(self, grid128):
        from phdisk import poisson_extend

        u = poisson_extend(BoundaryFunction.from_function(256, np.cos), grid128)
        M = nontangential_max(u, np.pi / 4)
        # brute-force oracle over a 4x finer sampling of the same function
        rr = np.linspace(1 / 512, 1 - 1 / 512, 511)
        tt = 2 * np.pi * np.arange(1024) / 1024
        Z = (rr[:, None] * np.exp(1j * tt[None, :])).ravel()
        V = np.abs(Z.real)
        for k in range(0, 256, 31):
            cone = Cone(complex(np.exp(1j * grid128.thetas[k])), np.pi / 4)
            oracle = V[cone.contains(Z)].max()
            assert abs(oracle - M.values[k].real) <= 2.0 / grid128.n_r

    def test_domination_invariant(self, grid128):
        from helpers import random_smooth_bandlimited

        rng = np.random.default_rng(2)
        f = random_smooth_bandlimited(grid128, rng, 16)
        M = nontangential_max(f, 0.6)
        z = grid128.nodes_z()[: grid128.n_r - 1]
        vals = np.abs(f.values[: grid128.n_r - 1])
        for k in range(0, 256, 63):
            cone = Cone(complex(np.exp(1j * grid128.thetas[k])), 0.6)
            sel = cone.contains(z)
            assert M.values[k].real >= vals[sel].max() - 1e-14

class TestConeGeometry:
    def test_region_composition(self):
        cone = Cone(1.0 + 0j, np.pi / 6)
        s = np.sin(np.pi / 6)
        # central disk belongs to the region
        assert cone.contains(np.array([0.3j]))[0]
        # near-vertex points along the axis belong
        assert cone.contains(np.array([0.95 + 0j]))[0]
        # a point outside the opening does not
        assert not cone.contains(np.array([0.9 + 0.4j]))[0]
        # beyond the tangent disk on the far side: outside the bounded component
        assert not cone.contains(np.array([-0.9 + 0j]))[0] or s > 0.9


class TestBoundaryMasks:
    def test_masked_boundary_norm_raises(self):
        vals = np.ones(256, dtype=complex)
        vals[3] = np.nan
        b = BoundaryFunction(vals)
        with pytest.raises(MaskedValueError):
            b.lp_norm(2.0)

    def test_fully_masked_ring_rejected(self, grid128):
        vals = np.ones((128, 256), dtype=complex)
        vals[-1, :] = np.nan
        with pytest.raises(MaskedValueError, match="fully masked"):
            boundary_trace(GridFunction(grid128, vals))


class TestOddRadialCount:
    @pytest.mark.parametrize("n_r", [5, 7, 255])
    def test_moments_exact_with_three_eighths_closure(self, n_r):
        g = make_grid(8, n_r)
        z = g.nodes_z()
        for a in (0, 1, 2):
            f = GridFunction(g, (np.abs(z) ** a).astype(complex))
            exact = 2 * np.pi / (a + 2)
            assert abs(area_integral(f).real - exact) <= 1e-13 * exact
