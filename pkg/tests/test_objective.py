import time
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aqcsketch import dense
from aqcsketch.engine import build_structure
from aqcsketch.objective import (
    ObjectiveContext,
    column_gradients,
    fidelity,
    fidelity_estimate,
    fidelity_from_trace,
    gradient_sketched,
    is_success,
    objective_full,
    objective_sketched,
    trace_inner,
    value_and_gradient,
)
from aqcsketch.sketch import SketchKind, SketchOperator, gaussian_sketch
from aqcsketch.verification import finite_difference


def pair(n, L, seed):
    rng = np.random.default_rng(seed)
    s = build_structure(n, L)
    return s, rng.uniform(0, 2 * np.pi, s.param_count), rng.uniform(0, 2 * np.pi, s.param_count)


class TestObjectiveFull:
    def test_zero_at_target(self):
        s, _, tu = pair(4, 6, 0)
        assert abs(objective_full(ObjectiveContext.full(s, tu), tu)) <= 1e-10

    def test_frobenius_form(self):
        s, th, tu = pair(3, 3, 1)
        V, U = dense.ansatz(s, th), dense.ansatz(s, tu)
        want = np.linalg.norm(V - U, "fro") ** 2 / (2 * s.dim)
        assert objective_full(ObjectiveContext.full(s, tu), th) == pytest.approx(want, abs=1e-10)

    def test_needs_full_sketch(self):
        s, th, tu = pair(3, 2, 2)
        with pytest.raises(ValueError):
            objective_full(ObjectiveContext(s, tu, gaussian_sketch(s.dim, 3, 0)), th)


class TestObjectiveSketched:
    def test_full_sketch_offset(self):
        s, th, tu = pair(4, 4, 3)
        ctx = ObjectiveContext.full(s, tu)
        assert objective_full(ctx, th) == pytest.approx(1 + objective_sketched(ctx, th), abs=1e-10)

    def test_minus_one_at_target(self):
        s, _, tu = pair(5, 5, 4)
        ctx = ObjectiveContext(s, tu, gaussian_sketch(s.dim, 7, 11))
        assert objective_sketched(ctx, tu) == pytest.approx(-1.0, abs=1e-10)

    def test_vs_dense_trace(self):
        s, th, tu = pair(4, 4, 5)
        sk = gaussian_sketch(s.dim, 3, 12)
        V, U = dense.ansatz(s, th), dense.ansatz(s, tu)
        X = sk.columns
        want = -dense.frobenius_inner(V @ X, U @ X).real / 3
        assert objective_sketched(ObjectiveContext(s, tu, sk), th) == pytest.approx(want, abs=1e-10)

    def test_dimension_mismatch(self):
        s, _, tu = pair(3, 1, 6)
        with pytest.raises(ValueError):
            ObjectiveContext(s, tu, gaussian_sketch(16, 2, 0))


class TestGradient:
    def test_stationary_at_target(self):
        s, _, tu = pair(4, 6, 7)
        g = gradient_sketched(ObjectiveContext(s, tu, gaussian_sketch(s.dim, 5, 1)), tu)
        assert np.linalg.norm(g) <= 1e-8

    def test_finite_differences(self):
        s, th, tu = pair(4, 4, 8)
        ctx = ObjectiveContext(s, tu, gaussian_sketch(s.dim, 5, 2))
        fd = finite_difference(lambda t: objective_sketched(ctx, t), th)
        assert np.max(np.abs(gradient_sketched(ctx, th) - fd) / np.abs(fd)) <= 1e-6

    def test_full_sketch_matches_full_objective(self):
        # The full-sketch gradient is the gradient of objective_full itself:
        # the two differ by a constant, so no extra 1/d factor appears.
        s, th, tu = pair(2, 1, 9)
        ctx = ObjectiveContext.full(s, tu)
        fd = finite_difference(lambda t: objective_full(ctx, t), th)
        np.testing.assert_allclose(gradient_sketched(ctx, th), fd, rtol=1e-6, atol=1e-10)

    def test_value_and_gradient_consistent(self):
        s, th, tu = pair(5, 7, 10)
        ctx = ObjectiveContext(s, tu, gaussian_sketch(s.dim, 4, 3))
        f, g = value_and_gradient(ctx, th)
        assert f == pytest.approx(objective_sketched(ctx, th), abs=1e-14)
        assert np.array_equal(g, gradient_sketched(ctx, th))

    def test_column_gradients_average(self):
        s, th, tu = pair(4, 5, 11)
        sk = gaussian_sketch(s.dim, 6, 4)
        per_col = column_gradients(s, th, tu, sk.columns)
        assert per_col.shape == (s.param_count, 6)
        g = gradient_sketched(ObjectiveContext(s, tu, sk), th)
        assert np.abs(per_col.mean(axis=1) - g).max() <= 1e-14

    def test_orthonormal_sketch_fd(self):
        s, th, tu = pair(3, 4, 12)
        q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((8, 3)) + 0j)
        ctx = ObjectiveContext(s, tu, SketchOperator(SketchKind.ORTHONORMAL, q))
        fd = finite_difference(lambda t: objective_sketched(ctx, t), th)
        np.testing.assert_allclose(gradient_sketched(ctx, th), fd, rtol=1e-6, atol=1e-10)

    def test_cost_ratio(self):
        # soft performance contract: warn, never fail
        s, th, tu = pair(10, 20, 13)
        ctx = ObjectiveContext(s, tu, gaussian_sketch(s.dim, 32, 5))
        t0 = time.perf_counter()
        objective_sketched(ctx, th)
        t1 = time.perf_counter()
        gradient_sketched(ctx, th)
        t2 = time.perf_counter()
        ratio = (t2 - t1) / max(t1 - t0, 1e-9)
        if ratio > 8:
            warnings.warn(f"gradient/objective cost ratio {ratio:.1f} exceeds 8")


class TestFidelity:
    def test_identical(self):
        s, _, tu = pair(4, 4, 14)
        assert fidelity(s, tu, tu) == pytest.approx(1.0, abs=1e-12)

    def test_zero_trace(self):
        assert fidelity_from_trace(0.0, 16) == pytest.approx(1 / 17)

    def test_vs_dense(self):
        s, th, tu = pair(3, 2, 15)
        t = dense.frobenius_inner(dense.ansatz(s, th), dense.ansatz(s, tu))
        want = (1 + abs(t) ** 2 / 8) / 9
        assert fidelity(s, th, tu) == pytest.approx(want, abs=1e-10)

    def test_chunking_and_workers(self):
        s, th, tu = pair(7, 6, 16)
        a = trace_inner(s, th, tu, chunk=256)
        b = trace_inner(s, th, tu, chunk=5, workers=3)
        assert abs(a - b) <= 1e-12

    def test_estimate(self):
        s, th, tu = pair(5, 3, 17)
        exact = fidelity(s, th, tu)
        est, se = fidelity_estimate(s, th, tu, 4000, seed=0)
        assert 0 <= est <= 1
        assert abs(est - exact) <= 4 * se + 1e-12
        assert fidelity_estimate(s, tu, tu, 10, seed=1)[0] == pytest.approx(1.0, abs=1e-12)

    def test_success_threshold(self):
        assert is_success(0.999) and not is_success(0.99899999)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 6), L=st.integers(0, 8), m=st.integers(1, 8), seed=st.integers(0, 2**32 - 1))
def test_objective_bounds(n, L, m, seed):
    s, th, tu = pair(n, L, seed)
    m = min(m, s.dim)
    f = objective_sketched(ObjectiveContext(s, tu, gaussian_sketch(s.dim, m, seed)), th)
    assert -1 - 1e-12 <= f <= 1 + 1e-12
    full = objective_full(ObjectiveContext.full(s, tu), th)
    assert -1e-12 <= full <= 2 + 1e-12
    assert 0 <= fidelity(s, th, tu) <= 1 + 1e-12


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 5), L=st.integers(0, 8), m=st.integers(1, 8), seed=st.integers(0, 2**32 - 1))
def test_projection_identity(n, L, m, seed):
    s, th, tu = pair(n, L, seed)
    m = min(m, s.dim)
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((s.dim, m)) + 1j * rng.standard_normal((s.dim, m)))
    V, U = dense.ansatz(s, th), dense.ansatz(s, tu)
    lhs = np.linalg.norm((V - U) @ q @ q.conj().T, "fro") ** 2 / (2 * m)
    rhs = 1 + objective_sketched(ObjectiveContext(s, tu, SketchOperator(SketchKind.ORTHONORMAL, q)), th)
    assert abs(lhs - rhs) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 5), L=st.integers(0, 6), m=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
def test_gradient_fd_property(n, L, m, seed):
    s, th, tu = pair(n, L, seed)
    ctx = ObjectiveContext(s, tu, gaussian_sketch(s.dim, min(m, s.dim), seed))
    fd = finite_difference(lambda t: objective_sketched(ctx, t), th)
    np.testing.assert_allclose(gradient_sketched(ctx, th), fd, rtol=1e-6, atol=1e-9)
