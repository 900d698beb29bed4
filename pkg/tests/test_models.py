import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import sparse

from screenloop.models import (
    LogisticCurve,
    TrainingError,
    aggressive_undersample,
    class_weights,
    decision,
    fit_logistic_1d,
    hinge_gradient,
    hinge_objective,
    train_svm,
)

# 2-D separable toy set: two positives on the right, two negatives left.
TOY_X = sparse.csr_matrix(
    np.array([[1.0, 0.2], [0.8, 0.6], [-0.9, 0.1], [-0.7, -0.5]])
)
TOY_Y = np.array([1.0, 1.0, -1.0, -1.0])


def _random_problem(rng, n=12, dim=6):
    X = sparse.random(n, dim, density=0.5, random_state=np.random.RandomState(int(rng.integers(1 << 30))), format="csr")
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    if np.all(y > 0):
        y[0] = -1.0
    if np.all(y < 0):
        y[0] = 1.0
    return X, y


def test_gradient_matches_finite_differences_everywhere():
    """Central differences (step 1e-5) vs analytic subgradient, 100 points."""
    rng = np.random.default_rng(1234)
    step = 1e-5
    for _ in range(100):
        X, y = _random_problem(rng)
        sw = class_weights(y, balanced=bool(rng.integers(2)))
        lam = 1.0 / X.shape[0]
        w = rng.normal(size=X.shape[1])
        b = float(rng.normal())
        grad_w, grad_b = hinge_gradient(w, b, X, y, sw, lam)

        fd = np.empty(X.shape[1] + 1)
        for j in range(X.shape[1]):
            e = np.zeros_like(w)
            e[j] = step
            fd[j] = (
                hinge_objective(w + e, b, X, y, sw, lam)
                - hinge_objective(w - e, b, X, y, sw, lam)
            ) / (2 * step)
        fd[-1] = (
            hinge_objective(w, b + step, X, y, sw, lam)
            - hinge_objective(w, b - step, X, y, sw, lam)
        ) / (2 * step)

        analytic = np.append(grad_w, grad_b)
        rel = np.linalg.norm(analytic - fd) / max(np.linalg.norm(fd), 1e-12)
        assert rel <= 1e-4


def test_balanced_weights_formula():
    y = np.array([1.0] + [-1.0] * 9)
    w = class_weights(y, balanced=True)
    assert w[0] == pytest.approx(10 / 2)
    assert w[1] == pytest.approx(10 / 18)


def test_balanced_weights_duplication_invariant():
    y = np.array([1.0, 1.0, -1.0])
    doubled = np.concatenate([y, y])
    assert sorted(set(class_weights(y, True))) == pytest.approx(
        sorted(set(class_weights(doubled, True)))
    )


def test_single_class_training_rejected():
    X = sparse.csr_matrix(np.eye(3))
    with pytest.raises(TrainingError, match="negative"):
        train_svm(X, np.ones(3))
    with pytest.raises(TrainingError, match="positive"):
        train_svm(X, -np.ones(3))


def test_toy_set_is_separable_and_model_separates():
    # brute-force grid: some (w, b) attains zero hinge loss
    grid = np.arange(-2.0, 2.01, 0.25)
    sw = class_weights(TOY_Y, balanced=True)
    lam = 1.0 / TOY_X.shape[0]
    separable = False
    best = np.inf
    for w1, w2, b in itertools.product(grid, grid, grid):
        w = np.array([w1, w2])
        margins = TOY_Y * (TOY_X @ w + b)
        if np.all(margins >= 1.0):
            separable = True
        best = min(best, hinge_objective(w, b, TOY_X, TOY_Y, sw, lam))
    assert separable

    model = train_svm(TOY_X, TOY_Y, balanced=True)
    assert np.all(np.sign(decision(model, TOY_X)) == TOY_Y)
    # trained objective is at least as good as the coarse grid optimum
    trained = hinge_objective(model.weights, model.bias, TOY_X, TOY_Y, sw, lam)
    assert trained <= best + 0.05
    assert np.all(np.isfinite(model.weights)) and np.isfinite(model.bias)


def test_decision_zero_vector_returns_bias():
    model = train_svm(TOY_X, TOY_Y)
    zero = sparse.csr_matrix((1, 2))
    assert decision(model, zero)[0] == pytest.approx(model.bias)


def test_decision_linearity():
    model = train_svm(TOY_X, TOY_Y)
    x = sparse.csr_matrix(np.array([[0.3, -0.4]]))
    d1 = decision(model, x)[0] - model.bias
    d2 = decision(model, 2 * x)[0] - model.bias
    assert d2 == pytest.approx(2 * d1)


def test_decision_dimension_mismatch():
    model = train_svm(TOY_X, TOY_Y)
    with pytest.raises(ValueError, match="dimension"):
        decision(model, sparse.csr_matrix((1, 5)))


def test_permuted_input_rows_give_same_decisions():
    rng = np.random.default_rng(7)
    X, y = _random_problem(rng, n=30, dim=10)
    perm = rng.permutation(30)
    a = train_svm(X, y)
    b = train_svm(X[perm], y[perm])
    probe = sparse.random(5, 10, density=0.6, random_state=3, format="csr")
    assert decision(a, probe) == pytest.approx(decision(b, probe), abs=1e-6)


def _marker_matrix(n, dim=4):
    """Rows tagged in column 0 with their own index so spies can identify them."""
    rows = np.zeros((n, dim))
    rows[:, 0] = np.arange(n)
    rows[:, 1] = 1.0
    return sparse.csr_matrix(rows)


def test_undersample_keeps_lowest_decisions(monkeypatch):
    import screenloop.models as m

    X = _marker_matrix(13)
    # decision = -row_index => the lowest values are the highest row ids
    model = m.ModelSnapshot(np.array([-1.0, 0.0, 0.0, 0.0]), 0.0, 3, 10)
    captured = {}
    real = m.train_svm

    def spy(Xs, ys, **kw):
        captured["rows"] = sorted(np.asarray(Xs[:, 0].todense()).ravel().tolist())
        captured["y"] = ys
        return real(Xs, ys, **kw)

    monkeypatch.setattr(m, "train_svm", spy)
    snapshot = aggressive_undersample(
        model, X, pos_rows=np.array([0, 1, 2]), neg_rows=np.arange(3, 13)
    )
    assert captured["rows"] == [0, 1, 2, 10, 11, 12]
    assert snapshot.undersampled
    assert (snapshot.n_pos, snapshot.n_neg) == (3, 3)


def test_undersample_keeps_all_when_few_negatives():
    X = _marker_matrix(7)
    model = train_svm(X, np.array([1, 1, 1, 1, 1, -1, -1.0]))
    snapshot = aggressive_undersample(
        model, X, pos_rows=np.arange(5), neg_rows=np.array([5, 6])
    )
    assert (snapshot.n_pos, snapshot.n_neg) == (5, 2)


def test_undersample_ties_break_by_row_id(monkeypatch):
    import screenloop.models as m

    X = _marker_matrix(9)
    # w = 0 on the marker column: every negative ties at decision = bias
    model = m.ModelSnapshot(np.zeros(4), 0.5, 2, 7)
    captured = {}
    real = m.train_svm

    def spy(Xs, ys, **kw):
        captured["rows"] = sorted(np.asarray(Xs[:, 0].todense()).ravel().tolist())
        return real(Xs, ys, **kw)

    monkeypatch.setattr(m, "train_svm", spy)
    aggressive_undersample(model, X, pos_rows=np.array([0, 1]), neg_rows=np.arange(2, 9))
    assert captured["rows"] == [0, 1, 2, 3]


@settings(max_examples=30, deadline=None)
@given(n_pos=st.integers(1, 6), n_neg=st.integers(1, 12))
def test_undersample_training_size(n_pos, n_neg):
    X = _marker_matrix(n_pos + n_neg)
    y = np.array([1.0] * n_pos + [-1.0] * n_neg)
    model = train_svm(X, y)
    snapshot = aggressive_undersample(
        model, X, np.arange(n_pos), np.arange(n_pos, n_pos + n_neg)
    )
    assert snapshot.n_pos + snapshot.n_neg == min(n_neg, n_pos) + n_pos


# ---------------------------------------------------------------------------
# logistic fit

# 6-point non-separable set; oracle values from an independent plain
# gradient-descent minimizer of the same objective (400k steps, lr 0.05).
LOGISTIC_POINTS = [(-2.0, 0), (-1.0, 1), (-0.5, 0), (0.5, 1), (1.0, 0), (2.0, 1)]
LOGISTIC_RIDGE_ORACLE = (0.4281875273785093, 0.0)
LOGISTIC_MLE_ORACLE = (0.6304156291572249, 0.0)


def test_logistic_matches_gd_oracle_ridge():
    curve = fit_logistic_1d(LOGISTIC_POINTS)
    assert curve.slope == pytest.approx(LOGISTIC_RIDGE_ORACLE[0], abs=1e-3)
    assert curve.intercept == pytest.approx(LOGISTIC_RIDGE_ORACLE[1], abs=1e-3)


def test_logistic_matches_gd_oracle_unpenalized():
    curve = fit_logistic_1d(LOGISTIC_POINTS, l2_c=None)
    assert curve.slope == pytest.approx(LOGISTIC_MLE_ORACLE[0], abs=1e-3)
    assert curve.intercept == pytest.approx(LOGISTIC_MLE_ORACLE[1], abs=1e-3)


def test_logistic_symmetric_data_zero_intercept():
    curve = fit_logistic_1d([(-2.0, 0), (-1.0, 0), (1.0, 1), (2.0, 1)])
    assert abs(curve.intercept) < 1e-4
    assert curve.slope > 0


def test_logistic_orders_simple_pair():
    curve = fit_logistic_1d([(-1.0, 0), (1.0, 1)])
    p = curve.predict(np.array([-1.0, 1.0]))
    assert p[1] > 0.5 > p[0]


def test_logistic_degenerate_single_class():
    curve = fit_logistic_1d([(0.0, 1), (1.0, 1), (2.0, 1)])
    assert curve.slope == 0.0
    assert curve.intercept == pytest.approx(np.log((1 - 1e-6) / 1e-6))
    low = fit_logistic_1d([(0.0, 0), (1.0, 0)])
    assert low.intercept == pytest.approx(np.log(1e-6 / (1 - 1e-6)))


def test_logistic_too_few_points():
    with pytest.raises(ValueError):
        fit_logistic_1d([(0.0, 1)])


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.tuples(st.floats(-5, 5), st.integers(0, 1)), min_size=2, max_size=30
    )
)
def test_logistic_monotone_when_slope_nonnegative(points):
    curve = fit_logistic_1d(points)
    assert np.isfinite(curve.slope) and np.isfinite(curve.intercept)
    grid = np.linspace(-10, 10, 50)
    p = curve.predict(grid)
    if curve.slope >= 0:
        assert np.all(np.diff(p) >= -1e-12)
    else:
        assert np.all(np.diff(p) <= 1e-12)


def test_curve_predict_is_sigmoid():
    curve = LogisticCurve(2.0, -1.0)
    assert curve.predict(np.array([0.5]))[0] == pytest.approx(0.5)
