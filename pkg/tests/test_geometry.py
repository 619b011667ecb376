import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hardtorus.errors import FeasibilityError, ValidationError
from hardtorus.geometry import (PhaseState, SystemParams, cylinder_radius,
                                energy, mass_inner, mass_norm, min_gap,
                                min_image, momentum, pair_distance,
                                project_to_Z, reduced_space, sample_state,
                                torus_delta, transverse_basis,
                                validate_params, validate_state)

P2 = SystemParams(masses=(1.0, 1.0), radius=0.1)
P3 = SystemParams(masses=(1.0, 2.0, 0.5), radius=0.1)

masses_st = st.lists(st.floats(0.1, 10.0), min_size=2, max_size=5)
vec_st = st.lists(st.floats(-5, 5, allow_nan=False), min_size=4, max_size=4)


class TestMassMetric:
    def test_unit_blocks(self):
        u = np.array([1.0, 0.0, 0.0, 1.0])
        assert mass_inner(u, u, P2) == 2.0

    def test_signed(self):
        p = SystemParams(masses=(2.0, 3.0), radius=0.1)
        u = np.array([1.0, 0.0, 1.0, 0.0])
        w = np.array([1.0, 0.0, -1.0, 0.0])
        assert mass_inner(u, w, p) == -1.0

    def test_zero(self):
        u = np.array([1.0, 2.0, 3.0, 4.0])
        assert mass_inner(u, np.zeros(4), P2) == 0.0

    @given(masses_st, st.integers(0, 2 ** 32 - 1))
    def test_norm_positive_and_bilinear(self, masses, seed):
        p = SystemParams(masses=tuple(masses), radius=0.01)
        rng = np.random.default_rng(seed)
        u = rng.standard_normal(2 * p.n)
        w = rng.standard_normal(2 * p.n)
        a = rng.standard_normal()
        assert mass_norm(u, p) >= 0.0
        assert np.isclose(mass_inner(a * u, w, p), a * mass_inner(u, w, p))
        assert np.isclose(mass_inner(u + w, w, p),
                          mass_inner(u, w, p) + mass_inner(w, w, p))
        assert np.isclose(mass_norm(u, p) ** 2, mass_inner(u, u, p))


class TestCylinderRadius:
    def test_equal_unit_masses(self):
        assert math.isclose(cylinder_radius(0, 1, P2), 0.2 / math.sqrt(2))

    def test_one_three(self):
        p = SystemParams(masses=(1.0, 3.0), radius=0.1)
        assert math.isclose(cylinder_radius(0, 1, p), 0.2 * math.sqrt(0.75))

    def test_equal_double_masses(self):
        p = SystemParams(masses=(2.0, 2.0), radius=0.1)
        assert math.isclose(cylinder_radius(0, 1, p), 0.2)

    def test_same_disk_refused(self):
        with pytest.raises(ValueError):
            cylinder_radius(1, 1, P2)

    @given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.01, 0.2))
    def test_formula(self, mi, mj, r):
        p = SystemParams(masses=(mi, mj), radius=r)
        assert math.isclose(cylinder_radius(0, 1, p),
                            2 * r * math.sqrt(mi * mj / (mi + mj)))


class TestProjectToZ:
    def test_uniform_translation_killed(self):
        u = np.tile([0.3, -0.7], 3)
        assert np.allclose(project_to_Z(u, P3), 0.0)

    def test_mean_subtraction(self):
        u = np.array([1.0, 0.0, 0.0, 0.0])
        assert np.allclose(project_to_Z(u, P2), [0.5, 0.0, -0.5, 0.0])

    @given(st.integers(0, 2 ** 32 - 1))
    def test_idempotent_zero_momentum(self, seed):
        rng = np.random.default_rng(seed)
        u = rng.standard_normal(6)
        z = project_to_Z(u, P3)
        assert np.allclose(project_to_Z(z, P3), z)
        blocks = z.reshape(3, 2)
        assert np.allclose(P3.mass_array @ blocks, 0.0, atol=1e-12)


class TestMinImage:
    def test_wrap(self):
        out, lat = min_image((0.6, 0.0))
        assert np.allclose(out, (-0.4, 0.0)) and tuple(lat) == (-1, 0)

    def test_tie_break(self):
        out, lat = min_image((0.5, 0.5))
        assert np.allclose(out, (-0.5, -0.5)) and tuple(lat) == (-1, -1)

    def test_already_minimal(self):
        out, lat = min_image((0.1, -0.2))
        assert np.allclose(out, (0.1, -0.2)) and tuple(lat) == (0, 0)

    @given(st.floats(-3, 3), st.floats(-3, 3))
    def test_minimality(self, dx, dy):
        out, lat = min_image((dx, dy))
        assert np.allclose((dx + lat[0], dy + lat[1]), out)
        best = min(np.hypot(dx + kx, dy + ky)
                   for kx in range(-4, 5) for ky in range(-4, 5))
        assert np.hypot(*out) <= best + 1e-12

    def test_shape_guard(self):
        with pytest.raises(ValueError):
            min_image(np.zeros((3, 2)))


class TestReducedSpace:
    def test_dimension_and_orthonormality(self):
        red = reduced_space(P3)
        assert red.dimension == 4
        basis = red.basis
        gram = np.array([[mass_inner(basis[:, i], basis[:, j], P3)
                          for j in range(4)] for i in range(4)])
        assert np.allclose(gram, np.eye(4), atol=1e-12)

    def test_projector_idempotent_self_adjoint(self):
        red = reduced_space(P3)
        proj = red.projector
        assert np.allclose(proj @ proj, proj, atol=1e-12)
        mw = np.repeat(P3.mass_array, 2)
        assert np.allclose(mw[:, None] * proj, (mw[:, None] * proj).T,
                           atol=1e-12)

    def test_transverse_basis(self):
        state = sample_state(0, P3)
        v = state.v.reshape(-1)
        basis = transverse_basis(v, P3)
        assert basis.shape == (6, 3)
        for col in basis.T:
            assert abs(mass_inner(col, v, P3)) < 1e-12
            assert np.allclose(P3.mass_array @ col.reshape(3, 2), 0.0,
                               atol=1e-12)

    def test_transverse_basis_zero_velocity(self):
        with pytest.raises(ValueError):
            transverse_basis(np.zeros(6), P3)


class TestValidation:
    def test_ok(self):
        assert validate_params(P3).ok

    def test_crowded_warning(self):
        p = SystemParams(masses=(1.0,) * 6, radius=0.1)
        assert validate_params(p).status == "warning"

    def test_negative_mass(self):
        with pytest.raises(ValidationError):
            validate_params(SystemParams(masses=(1.0, -1.0), radius=0.1))

    def test_overlapping_state(self):
        state = PhaseState(q=[[0.5, 0.5], [0.55, 0.5]],
                           v=[[0.0, 0.0], [0.0, 0.0]])
        with pytest.raises(ValidationError):
            validate_state(state, P2)


class TestSampleState:
    def test_deterministic(self):
        a = sample_state(7, P3)
        b = sample_state(7, P3)
        assert np.array_equal(a.q, b.q) and np.array_equal(a.v, b.v)

    def test_streams_differ(self):
        a = sample_state(7, P3)
        b = sample_state(7, P3, stream=1)
        assert not np.array_equal(a.q, b.q)

    def test_shell(self):
        for seed in range(10):
            state = sample_state(seed, P3)
            assert abs(2.0 * energy(state, P3) - 1.0) <= 1e-12
            assert np.max(np.abs(momentum(state, P3))) <= 1e-12
            assert min_gap(state, P3)[0] > 2 * P3.radius

    def test_infeasible(self):
        with pytest.raises(FeasibilityError):
            sample_state(0, SystemParams(masses=(1.0, 1.0), radius=0.45),
                         max_tries=200)


class TestTorusDistances:
    @given(st.integers(0, 2 ** 32 - 1))
    def test_torus_delta_antisymmetric(self, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.random(2), rng.random(2)
        d1, _ = torus_delta(a, b)
        d2, _ = torus_delta(b, a)
        assert np.allclose(d1, -d2)
        assert np.hypot(*d1) <= math.hypot(0.5, 0.5) + 1e-12

    def test_pair_distance_matches_delta(self):
        state = sample_state(1, P3)
        for i in range(3):
            for j in range(i + 1, 3):
                d, _ = torus_delta(state.q[i], state.q[j])
                assert np.isclose(pair_distance(state, i, j), np.hypot(*d))
