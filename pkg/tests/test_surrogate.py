import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from morphkit.errors import ValidationError
from morphkit.geometry import (
    ANGLE_SUM,
    REST_ANGLES,
    closure_residual,
    polygon_is_simple,
)
from morphkit.surrogate import (
    H_MAX,
    H_MIN,
    InfillDesign,
    MaterialParams,
    R_MAX,
    R_MIN,
    _closure_constraints,
    beam_curvature,
    closure_project,
    raw_angle_increments,
    surrogate_forward,
    surrogate_forward_batch,
)


def make_design(r=0.1, h=0.05, b=1):
    return InfillDesign(np.full(8, r), np.full(8, h), np.full(8, b))


def rand_design(rng):
    return InfillDesign(
        rng.uniform(R_MIN, R_MAX, 8),
        rng.uniform(H_MIN, H_MAX, 8),
        rng.choice([-1, 1], 8),
    )


class TestInfillDesign:
    def test_bounds_enforced(self):
        with pytest.raises(ValidationError):
            make_design(r=0.3)
        with pytest.raises(ValidationError):
            make_design(h=0.5)
        with pytest.raises(ValidationError):
            make_design(b=0)

    def test_as_vector_layout(self):
        d = make_design(r=0.1, h=0.05, b=-1)
        v = d.as_vector()
        assert v.shape == (24,)
        np.testing.assert_allclose(v[:8], 0.1)
        np.testing.assert_allclose(v[8:16], 0.05)
        np.testing.assert_allclose(v[16:], -1.0)


class TestBeamCurvature:
    def test_timoshenko_oracle_value(self):
        # full Timoshenko bimetal formula with equal layers (m = 1) and equal
        # moduli (n = 1): kappa = 6 (1+m)^2 dA dT / (h (3(1+m)^2 + (1+mn)(m^2+1/(mn))))
        m = n = 1.0
        h, da, dt = 0.05, 0.003, 100.0
        full = (6 * (1 + m) ** 2 * da * dt) / (
            h * (3 * (1 + m) ** 2 + (1 + m * n) * (m * m + 1.0 / (m * n)))
        )
        mat = MaterialParams()
        assert beam_curvature(h, mat) == pytest.approx(full, rel=1e-12)
        assert beam_curvature(h, mat) == pytest.approx(9.0, rel=1e-12)

    def test_zero_delta_t(self):
        assert beam_curvature(0.05, MaterialParams(delta_T=0.0)) == 0.0

    def test_linear_in_delta_t(self):
        full = beam_curvature(0.05, MaterialParams(delta_T=100.0))
        half = beam_curvature(0.05, MaterialParams(delta_T=50.0))
        assert half == pytest.approx(full / 2, rel=1e-12)

    def test_nonpositive_thickness_rejected(self):
        with pytest.raises(ValidationError):
            beam_curvature(0.0, MaterialParams())


class TestRawAngleIncrements:
    def test_identical_beams_give_equal_increments(self, mat):
        inc = raw_angle_increments(make_design(), mat)
        np.testing.assert_allclose(inc, inc[0])

    def test_orientation_flip_negates(self, mat, rng):
        d = rand_design(rng)
        flipped = InfillDesign(d.radii, d.thicknesses, -d.orientations)
        np.testing.assert_allclose(
            raw_angle_increments(flipped, mat), -raw_angle_increments(d, mat), atol=1e-15
        )

    def test_direct_formula_single_vertex(self, mat):
        # hinge j is driven by beams j-1 and j with weight (r/r_max) b kappa(h)
        r = np.full(8, R_MIN)
        h = np.full(8, H_MAX)
        b = np.ones(8)
        r[0] = 0.2
        h[0] = 0.05
        d = InfillDesign(r, h, b)
        inc = raw_angle_increments(d, mat)
        base = mat.c0 * 0.5 * (R_MIN / R_MAX) * beam_curvature(H_MAX, mat)
        strong = mat.c0 * 0.5 * (0.2 / R_MAX) * beam_curvature(0.05, mat)
        np.testing.assert_allclose(inc[0], base + strong, rtol=1e-12)  # beams 7 and 0
        np.testing.assert_allclose(inc[1], strong + base, rtol=1e-12)  # beams 0 and 1
        np.testing.assert_allclose(inc[2:], 2 * base, rtol=1e-12)


class TestClosureProject:
    def test_zero_increment_fixed_point(self):
        np.testing.assert_allclose(closure_project(REST_ANGLES), REST_ANGLES, atol=1e-12)

    def test_idempotence(self, mat, rng):
        for _ in range(10):
            raw = REST_ANGLES + rng.uniform(-0.3, 0.3, 8)
            once = closure_project(raw)
            twice = closure_project(once)
            np.testing.assert_allclose(twice, once, atol=1e-10)

    def test_uniform_shift_removed(self):
        theta = closure_project(REST_ANGLES + 0.01)
        assert theta.sum() == pytest.approx(ANGLE_SUM, abs=1e-10)
        assert closure_residual(theta) < 1e-9

    def test_matches_slsqp_oracle(self, rng):
        for _ in range(5):
            raw = REST_ANGLES + rng.uniform(-0.25, 0.25, 8)
            got = closure_project(raw)

            def cons(t):
                g, _ = _closure_constraints(t[None])
                return g[0]

            ref = minimize(
                lambda t: ((t - raw) ** 2).sum(),
                REST_ANGLES,
                constraints={"type": "eq", "fun": cons},
                method="SLSQP",
                options={"ftol": 1e-14, "maxiter": 200},
            )
            assert ref.success
            np.testing.assert_allclose(got, ref.x, atol=1e-6)

    def test_rest_jacobian_rank_three(self):
        _, J = _closure_constraints(REST_ANGLES[None])
        assert np.linalg.matrix_rank(J[0]) == 3

    def test_out_of_range_raw_rejected(self):
        bad = REST_ANGLES.copy()
        bad[0] = -0.1
        with pytest.raises(ValidationError):
            closure_project(bad)


class TestSurrogateForward:
    def test_output_satisfies_cell_invariants(self, mat, rng):
        for _ in range(20):
            cfg = surrogate_forward(rand_design(rng), mat)
            assert cfg.angles.sum() == pytest.approx(ANGLE_SUM, abs=1e-8)
            assert closure_residual(cfg.angles) < 1e-8
            d = np.roll(cfg.coords, -1, axis=0) - cfg.coords
            np.testing.assert_allclose(np.hypot(*d.T), 0.5, atol=1e-8)
            assert polygon_is_simple(cfg.coords)

    def test_deterministic(self, mat, rng):
        d = rand_design(rng)
        a = surrogate_forward(d, mat)
        b = surrogate_forward(d, mat)
        assert np.array_equal(a.angles, b.angles)
        assert np.array_equal(a.coords, b.coords)

    def test_neutral_alternating_design_near_rest(self, mat):
        d = make_design()
        d = InfillDesign(d.radii, d.thicknesses, np.array([1, -1] * 4))
        cfg = surrogate_forward(d, mat)
        # alternating orientations cancel at every hinge except through the
        # closure projection, which stays near rest
        assert np.abs(cfg.angles - REST_ANGLES).max() < 0.1

    def test_smoothness_in_thickness(self, mat, rng):
        d = rand_design(rng)
        h2 = d.thicknesses.copy()
        h2[3] += 1e-6
        d2 = InfillDesign(d.radii, h2, d.orientations)
        delta = np.abs(
            surrogate_forward(d2, mat).angles - surrogate_forward(d, mat).angles
        ).max()
        assert delta < 1e-3

    def test_batch_matches_scalar(self, mat, rng):
        designs = [rand_design(rng) for _ in range(6)]
        theta, coords, valid = surrogate_forward_batch(
            np.stack([d.radii for d in designs]),
            np.stack([d.thicknesses for d in designs]),
            np.stack([d.orientations for d in designs]),
            mat,
        )
        assert valid.all()
        for i, d in enumerate(designs):
            cfg = surrogate_forward(d, mat)
            np.testing.assert_allclose(theta[i], cfg.angles, atol=1e-12)
            np.testing.assert_allclose(coords[i], cfg.coords, atol=1e-12)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_angle_sum_property(self, seed):
        rng = np.random.default_rng(seed)
        mat = MaterialParams()
        cfg = surrogate_forward(rand_design(rng), mat)
        assert abs(cfg.angles.sum() - ANGLE_SUM) < 1e-8
