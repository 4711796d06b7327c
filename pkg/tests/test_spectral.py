import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnsdecay.spectral import (
    GridSpec,
    PhysicalParams,
    SpectralVectorField,
    dealias,
    fractional_laplacian,
    h_alpha_sq,
    l2_sq,
    leray_project,
    norms,
    wavenumbers,
)


def random_field(grid, seed=0):
    rng = np.random.default_rng(seed)
    return SpectralVectorField.from_physical(grid, rng.standard_normal((grid.dim,) + grid.shape))


def single_mode(grid, j, vec):
    """Real field vec * cos(k.x) built from one mode pair."""
    coeffs = np.zeros((grid.dim,) + grid.shape, dtype=complex)
    idx = tuple(int(i) % grid.n for i in j)
    neg = tuple(int(-i) % grid.n for i in j)
    for c in range(grid.dim):
        coeffs[(c,) + idx] += 0.5 * vec[c]
        coeffs[(c,) + neg] += 0.5 * vec[c]
    return SpectralVectorField(grid, coeffs)


def sin_x_e2(grid):
    x = grid.coordinates()
    zero = np.zeros(grid.shape)
    return SpectralVectorField.from_physical(grid, np.stack([zero, np.sin(x[0]), zero]))


class TestGridSpec:
    def test_wavenumbers_unit_box(self):
        np.testing.assert_array_equal(wavenumbers(GridSpec(4, 2 * np.pi)), [0, 1, -2, -1])

    def test_wavenumbers_scaled_box(self):
        np.testing.assert_array_equal(wavenumbers(GridSpec(4, np.pi)), [0, 2, -4, -2])

    def test_fft_ordering(self):
        assert wavenumbers(GridSpec(8))[5] == -3

    def test_wavenumbers_reproducible(self):
        a = wavenumbers(GridSpec(16, 3.7))
        b = wavenumbers(GridSpec(16, 3.7))
        assert a.tobytes() == b.tobytes()
        np.testing.assert_array_equal(a, (2 * np.pi / 3.7) * np.fft.fftfreq(16, 1 / 16))

    @pytest.mark.parametrize("kwargs", [{"n": 2}, {"n": 7}, {"n": 8, "box_length": 0.0}, {"n": 8, "dim": 4}])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            GridSpec(**kwargs)


class TestPhysicalParams:
    def test_valid(self):
        p = PhysicalParams(0.5, 1.0, 0.0)
        assert not p.outside_theorem_range

    def test_beta_below_one(self):
        with pytest.raises(ValueError, match="beta"):
            PhysicalParams(1.0, 0.5, 1.0)

    def test_alpha_in_duan_range_warns(self):
        with pytest.warns(UserWarning):
            p = PhysicalParams(1.8, 2.0, 1.0)
        assert p.outside_theorem_range

    def test_alpha_above_two(self):
        with pytest.raises(ValueError):
            PhysicalParams(2.5, 2.0, 1.0)


class TestFractionalLaplacian:
    def test_unit_mode_alpha_one(self):
        g = GridSpec(8)
        u = single_mode(g, (1, 0, 0), (0, 1, 0))
        np.testing.assert_allclose(fractional_laplacian(u, 1.0).coeffs, u.coeffs)

    def test_half_power_scales_by_k(self):
        g = GridSpec(8)
        u = single_mode(g, (2, 0, 0), (0, 0, 1))
        np.testing.assert_allclose(fractional_laplacian(u, 0.5).coeffs, 2 * u.coeffs)

    def test_sin3x_matches_exact(self):
        g = GridSpec(32)
        x = g.coordinates()
        zero = np.zeros(g.shape)
        f = np.stack([zero, np.sin(3 * x[0]), zero])
        out = fractional_laplacian(SpectralVectorField.from_physical(g, f), 1.0).to_physical()
        np.testing.assert_allclose(out, 9 * f, atol=1e-12)

    def test_second_order_finite_difference_agreement(self):
        errors = []
        for n in (16, 32, 64):
            g = GridSpec(n)
            x = g.coordinates()
            zero = np.zeros(g.shape)
            f = np.stack([zero, np.sin(3 * x[0]), zero])
            spec = fractional_laplacian(SpectralVectorField.from_physical(g, f), 1.0).to_physical()
            fd = -(np.roll(f, -1, axis=1) - 2 * f + np.roll(f, 1, axis=1)) / g.dx**2
            errors.append(np.max(np.abs(spec - fd)))
        rates = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
        np.testing.assert_allclose(rates, 2.0, atol=0.1)

    def test_alpha_one_is_spectral_minus_laplacian(self):
        u = random_field(GridSpec(8))
        np.testing.assert_array_equal(
            fractional_laplacian(u, 1.0).coeffs, u.coeffs * u.grid.kmag**2.0
        )

    def test_zero_mode_mapped_to_zero(self):
        g = GridSpec(8)
        coeffs = np.zeros((3,) + g.shape, dtype=complex)
        coeffs[0, 0, 0, 0] = 1.0
        assert np.all(fractional_laplacian(SpectralVectorField(g, coeffs), 0.7).coeffs == 0)

    def test_inverse_rejects_mean(self):
        g = GridSpec(8)
        coeffs = np.zeros((3,) + g.shape, dtype=complex)
        coeffs[1, 0, 0, 0] = 0.3
        with pytest.raises(ValueError, match="mean-free"):
            fractional_laplacian(SpectralVectorField(g, coeffs), 0.5, sign=-1)

    def test_inverse_undoes_forward_on_mean_free(self):
        g = GridSpec(8)
        u = random_field(g, 3)
        c = u.coeffs.copy()
        c[:, 0, 0, 0] = 0
        u = SpectralVectorField(g, c)
        back = fractional_laplacian(fractional_laplacian(u, 0.8), 0.8, sign=-1)
        np.testing.assert_allclose(back.coeffs, u.coeffs, atol=1e-13)

    def test_rejects_nonpositive_alpha(self):
        with pytest.raises(ValueError):
            fractional_laplacian(random_field(GridSpec(4)), 0.0)

    @settings(max_examples=30, deadline=None)
    @given(
        a1=st.floats(0.05, 1.25),
        a2=st.floats(0.05, 1.25),
        seed=st.integers(0, 2**16),
    )
    def test_composition(self, a1, a2, seed):
        u = random_field(GridSpec(8, 3.0), seed)
        lhs = fractional_laplacian(fractional_laplacian(u, a1), a2).coeffs
        rhs = fractional_laplacian(u, a1 + a2).coeffs
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))


class TestLerayProjection:
    def test_gradient_field_annihilated(self):
        g = GridSpec(8)
        rng = np.random.default_rng(1)
        phi = SpectralVectorField.from_physical(g, rng.standard_normal((3,) + g.shape)).coeffs[0]
        grad = SpectralVectorField(g, 1j * g.kvec * phi)
        assert np.max(np.abs(leray_project(grad).coeffs)) <= 1e-14 * np.max(np.abs(grad.coeffs))

    def test_divergence_free_unchanged(self):
        u = sin_x_e2(GridSpec(8))
        np.testing.assert_allclose(leray_project(u).coeffs, u.coeffs, atol=1e-14)

    def test_hand_evaluated_mode(self):
        g = GridSpec(8)
        coeffs = np.zeros((3,) + g.shape, dtype=complex)
        coeffs[0, 1, 1, 0] = 1.0
        out = leray_project(SpectralVectorField(g, coeffs)).coeffs[:, 1, 1, 0]
        np.testing.assert_allclose(out, [0.5, -0.5, 0.0], atol=1e-15)

    def test_zero_mode_untouched(self):
        g = GridSpec(8)
        coeffs = np.zeros((3,) + g.shape, dtype=complex)
        coeffs[:, 0, 0, 0] = [1.0, 2.0, 3.0]
        np.testing.assert_array_equal(leray_project(SpectralVectorField(g, coeffs)).coeffs, coeffs)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**16), dim=st.sampled_from([2, 3]))
    def test_idempotent_and_solenoidal(self, seed, dim):
        u = random_field(GridSpec(8, 5.0, dim=dim), seed)
        pu = leray_project(u)
        ppu = leray_project(pu)
        assert l2_sq(ppu - pu) ** 0.5 <= 1e-12 * l2_sq(pu) ** 0.5
        assert pu.max_divergence_ratio() <= 1e-12


class TestDealias:
    def test_cutoff_n8(self):
        g = GridSpec(8)
        coeffs = np.zeros((3,) + g.shape, dtype=complex)
        coeffs[0, 3, 0, 0] = coeffs[0, -3, 0, 0] = 1.0
        coeffs[0, 2, 0, 0] = coeffs[0, -2, 0, 0] = 1.0
        out = dealias(SpectralVectorField(g, coeffs)).coeffs
        assert out[0, 3, 0, 0] == 0 and out[0, -3, 0, 0] == 0
        assert out[0, 2, 0, 0] == 1 and out[0, -2, 0, 0] == 1

    def test_zero_field(self):
        g = GridSpec(8)
        assert np.all(dealias(SpectralVectorField.zeros(g)).coeffs == 0)

    def test_idempotent(self):
        u = dealias(random_field(GridSpec(12)))
        np.testing.assert_array_equal(dealias(u).coeffs, u.coeffs)


class TestNorms:
    params = PhysicalParams(1.0, 3.0, 1.0)

    def test_sin_l2(self):
        n = norms(sin_x_e2(GridSpec(16)), self.params)
        assert n.l2**2 == pytest.approx((2 * np.pi) ** 3 / 2, rel=1e-13)

    def test_sin_h1(self):
        # ||grad sin x||^2 = int cos^2 = same value
        assert h_alpha_sq(sin_x_e2(GridSpec(16)), 1.0) == pytest.approx((2 * np.pi) ** 3 / 2, rel=1e-13)

    def test_zero(self):
        assert norms(SpectralVectorField.zeros(GridSpec(8)), self.params) == (0.0, 0.0, 0.0)

    def test_beta_one_consistency(self):
        n = norms(sin_x_e2(GridSpec(16)), PhysicalParams(1.0, 1.0, 1.0))
        assert abs(n.l2 - n.l_beta_plus_1) <= 1e-10 * n.l2

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**16))
    def test_parseval(self, seed):
        g = GridSpec(8, 2.5)
        u = random_field(g, seed)
        phys = u.to_physical()
        quad = g.cell_volume * np.sum(phys**2)
        assert abs(quad - l2_sq(u)) <= 1e-10 * quad

    def test_deterministic(self):
        u = random_field(GridSpec(16), 5)
        assert norms(u, self.params) == norms(u, self.params)


class TestConjugateSymmetry:
    @pytest.mark.parametrize(
        "op",
        [
            leray_project,
            dealias,
            lambda f: fractional_laplacian(f, 0.6),
            lambda f: fractional_laplacian(fractional_laplacian(f, 0.6) * 1.0, 0.3),
        ],
    )
    def test_preserved(self, op):
        u = random_field(GridSpec(8, 4.0), 11)
        assert u.is_conjugate_symmetric()
        assert op(u).is_conjugate_symmetric()

    def test_physical_roundtrip_real(self):
        u = leray_project(random_field(GridSpec(8), 2))
        back = SpectralVectorField.from_physical(u.grid, u.to_physical())
        np.testing.assert_allclose(back.coeffs, u.coeffs, atol=1e-15)


class TestFieldValue:
    def test_immutable(self):
        u = random_field(GridSpec(4))
        with pytest.raises(ValueError):
            u.coeffs[0, 0, 0, 0] = 1.0

    def test_grid_mismatch(self):
        with pytest.raises(ValueError, match="grid mismatch"):
            random_field(GridSpec(4)) + random_field(GridSpec(6))

    def test_shape_checked(self):
        with pytest.raises(ValueError, match="shape"):
            SpectralVectorField(GridSpec(4), np.zeros((3, 4, 4)))
