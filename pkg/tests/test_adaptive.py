import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dklms.adaptive import (
    DKLMS, KLMS, CentralizedKLMS, DiffusionLMS, KernelBuffer, NonCooperativeKLMS, instantaneous_loss,
    make_learner,
)
from dklms.graph import Topology, default_topology, metropolis_weights, propagation_weights
from dklms.kernel import KernelParams, kernel_eval
from dklms.sim import generate_linear_stream, sample_node_params

from oracles import CoefficientTableDKLMS, klms_reference, truncated_closed_form

BETA = 1.1
KP = KernelParams(BETA)


def line(K):
    return Topology.from_edges(K, [(i, i + 1) for i in range(K - 1)])


def random_data(seed, N, K, m=1, scale=0.5):
    rng = np.random.default_rng(seed)
    return rng.normal(scale=scale, size=(N, K, m)), rng.normal(size=(N, K))


def dklms(A, L, topo=None, mask="none", mu=0.6, m=1, capacity=None):
    return DKLMS(propagation_weights(A, topo, L, mask), KP, mu, capacity, m)


# -- DKLMS ----------------------------------------------------------------

def test_empty_buffer_predicts_zero():
    f = dklms(metropolis_weights(line(3)), 5)
    assert f.predict(np.ones((3, 1))).tolist() == [0.0, 0.0, 0.0]


def test_first_step_errors_equal_desired():
    f = dklms(metropolis_weights(line(2)), 5)
    assert f.step([[0.1], [0.2]], [1.0, -2.0]).tolist() == [1.0, -2.0]


def test_single_node_single_slot():
    f = dklms(np.eye(1), 3, mu=0.6)
    e1 = f.step([[0.2]], [0.7])[0]
    pred = f.predict([[0.5]])[0]
    assert pred == pytest.approx(0.6 * e1 * kernel_eval(KP, [0.5], [0.2]), rel=1e-15)


def test_three_node_line_two_slots_matches_table():
    A = metropolis_weights(line(3))
    X, d = random_data(11, 3, 3)
    f, ref = dklms(A, 5), CoefficientTableDKLMS(A, BETA, 0.6)
    for n in range(2):
        f.step(X[n], d[n])
        ref.step(X[n], d[n])
    np.testing.assert_allclose(f.predict(X[2]), ref.predict(X[2]), rtol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(1, 40), st.integers(1, 3))
def test_closed_form_matches_coefficient_table(seed, K, N, m):
    rng = np.random.default_rng(seed)
    edges = [(k, k + 1) for k in range(K - 1)] + [(a, b) for a in range(K) for b in range(a + 2, K)
                                                   if rng.random() < 0.3]
    topo = Topology.from_edges(K, edges)
    A = metropolis_weights(topo)
    mu = rng.uniform(0.1, 1.0, size=K)
    X, d = random_data(seed, N + 1, K, m)
    f, ref = DKLMS(propagation_weights(A, topo, N + 1), KP, mu, None, m), CoefficientTableDKLMS(A, BETA, mu)
    for n in range(N):
        np.testing.assert_allclose(f.step(X[n], d[n]), ref.step(X[n], d[n]), rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(f.predict(X[N]), ref.predict(X[N]), rtol=1e-9, atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_absorb_mask_matches_one_hop_table(seed, K):
    topo = line(K)
    A = metropolis_weights(topo)
    N = 25
    X, d = random_data(seed, N, K, 2)
    f = dklms(A, N, topo, "absorb", m=2)
    ref = CoefficientTableDKLMS(A, BETA, 0.6, neighborhoods=topo.neighborhoods)
    for n in range(N):
        np.testing.assert_allclose(f.step(X[n], d[n]), ref.step(X[n], d[n]), rtol=1e-9, atol=1e-12)
    # every center a node holds belongs to a neighbor
    for k, table in enumerate(ref.table):
        assert {owner for owner, _ in table} <= topo.neighborhoods[k]


def test_unit_buffer_keeps_latest_slot():
    f = dklms(metropolis_weights(line(2)), 1)
    X, d = random_data(3, 4, 2)
    for n in range(4):
        f.step(X[n], d[n])
        assert f.buffer.time_indices.tolist() == [n + 1]


def test_buffer_truncation_against_closed_form():
    K, N = 4, 20
    A = metropolis_weights(line(K))
    X, d = random_data(5, N + 1, K)
    full, short = dklms(A, N), dklms(A, 5, capacity=5)
    e_full, e_short = [], []
    for n in range(N):
        np.testing.assert_allclose(full.predict(X[n]), truncated_closed_form(A, BETA, 0.6, X[:n], e_full, X[n]),
                                   rtol=1e-11, atol=1e-13)
        np.testing.assert_allclose(short.predict(X[n]),
                                   truncated_closed_form(A, BETA, 0.6, X[:n], e_short, X[n], L=5),
                                   rtol=1e-11, atol=1e-13)
        e_full.append(full.step(X[n], d[n]))
        e_short.append(short.step(X[n], d[n]))
        assert len(short.buffer) == min(n + 1, 5)
    assert not np.allclose(e_full[-1], e_short[-1])


def test_buffer_slots_and_validation():
    buf = KernelBuffer(2, 1, 1)
    for t in (1, 2, 3):
        buf.append(t, [[float(t)]], [t * 0.1])
    assert [s.time_index for s in buf.slots] == [2, 3]
    with pytest.raises(ValueError, match="increase"):
        buf.append(3, [[0.0]], [0.0])
    grow = KernelBuffer(None, 1, 1)
    for t in range(1, 200):
        grow.append(t, [[0.0]], [0.0])
    assert len(grow) == 199
    with pytest.raises(ValueError):
        KernelBuffer(0, 1, 1)


def test_dklms_rejects_bad_input():
    f = dklms(metropolis_weights(line(2)), 3, m=2)
    with pytest.raises(ValueError, match="dimension"):
        f.step(np.zeros((2, 1)), [0.0, 0.0])
    with pytest.raises(ValueError, match="finite"):
        f.step(np.zeros((2, 2)), [np.nan, 0.0])
    with pytest.raises(ValueError, match="capacity"):
        DKLMS(propagation_weights(np.eye(2), None, 3), KP, 0.5, capacity=4)
    with pytest.raises(ValueError, match="positive"):
        DKLMS(propagation_weights(np.eye(2), None, 3), KP, [0.5, 0.0])


def test_determinism():
    A = metropolis_weights(default_topology())
    X, d = random_data(9, 50, 10, 2)
    runs = []
    for _ in range(2):
        f = dklms(A, 20, default_topology(), "absorb", m=2, capacity=20)
        runs.append(np.array([f.step(X[n], d[n]) for n in range(50)]))
    assert np.array_equal(runs[0], runs[1])


# -- KLMS and reductions --------------------------------------------------

def test_klms_first_steps():
    f = KLMS(KP, 0.6)
    e1, p1 = f.step([0.3], 0.8)
    assert (e1, p1) == (0.8, 0.0)
    e2, p2 = f.step([0.1], -0.2)
    assert p2 == pytest.approx(0.6 * 0.8 * kernel_eval(KP, [0.1], [0.3]), rel=1e-15)
    assert e2 == pytest.approx(-0.2 - p2, rel=1e-15)


def test_klms_matches_plain_loop():
    rng = np.random.default_rng(2)
    xs, ds = rng.normal(size=(60, 2)), rng.normal(size=60)
    f = KLMS(KP, 0.6, dim=2)
    out = [f.step(x, d) for x, d in zip(xs, ds)]
    ref_e, ref_p = klms_reference(BETA, 0.6, xs.tolist(), ds.tolist())
    np.testing.assert_allclose([o[0] for o in out], ref_e, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose([o[1] for o in out], ref_p, rtol=1e-12, atol=1e-14)


def test_klms_validation():
    f = KLMS(KP, 0.6, dim=2)
    with pytest.raises(ValueError):
        f.step([0.0], 1.0)
    with pytest.raises(ValueError):
        f.step([0.0, 0.0], float("inf"))
    with pytest.raises(ValueError):
        KLMS(KP, 0.0)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dklms_single_node_is_klms(seed):
    N = 200
    X, d = random_data(seed, N, 1)
    net, single = dklms(np.eye(1), N, mu=0.6), KLMS(KP, 0.6)
    for n in range(N):
        e_net = net.step(X[n], d[n])[0]
        assert abs(e_net - single.step(X[n, 0], d[n, 0])[0]) <= 1e-10


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_dklms_identity_is_noncooperative(seed, K):
    N = 200
    X, d = random_data(seed, N, K)
    net = dklms(np.eye(K), N)
    solo = NonCooperativeKLMS(K, KP, 0.6)
    for n in range(N):
        assert np.max(np.abs(net.step(X[n], d[n]) - solo.step(X[n], d[n]))) <= 1e-10


def test_noncooperative_equals_separate_klms_and_is_uncoupled():
    K, N = 3, 40
    X, d = random_data(4, N, K, 2)
    solo = NonCooperativeKLMS(K, KP, 0.6, capacity=10, dim=2)
    filters = [KLMS(KP, 0.6, capacity=10, dim=2) for _ in range(K)]
    d_other = d.copy()
    d_other[:, 1:] += 5.0
    other = NonCooperativeKLMS(K, KP, 0.6, capacity=10, dim=2)
    for n in range(N):
        e = solo.step(X[n], d[n])
        ref = [f.step(X[n, k], d[n, k])[0] for k, f in enumerate(filters)]
        np.testing.assert_allclose(e, ref, rtol=1e-12, atol=1e-14)
        assert other.step(X[n], d_other[n])[0] == e[0]


def test_noncooperative_single_node_is_klms():
    X, d = random_data(8, 30, 1)
    a, b = NonCooperativeKLMS(1, KP, 0.6), KLMS(KP, 0.6)
    for n in range(30):
        assert a.step(X[n], d[n])[0] == pytest.approx(b.step(X[n, 0], d[n, 0])[0], abs=1e-15)


def test_centralized_klms_round_robin():
    K, N = 3, 10
    X, d = random_data(6, N, K)
    fusion = CentralizedKLMS(K, KP, 0.6)
    ref = KLMS(KP, 0.6)
    for n in range(N):
        e = fusion.step(X[n], d[n])
        np.testing.assert_allclose(e, [ref.step(X[n, k], d[n, k])[0] for k in range(K)], rtol=1e-12)


# -- linear diffusion LMS ------------------------------------------------

def test_dlms_first_step_and_classical_lms():
    f = DiffusionLMS(np.eye(1), 0.1, dim=2)
    x, w = np.array([0.5, -1.0]), np.zeros(2)
    assert f.step([x], [2.0])[0] == 2.0
    w = w + 0.1 * 2.0 * x
    np.testing.assert_allclose(f.estimates[0], w)
    x2 = np.array([0.3, 0.2])
    e2 = 1.0 - w @ x2
    assert f.step([x2], [1.0])[0] == pytest.approx(e2)
    np.testing.assert_allclose(f.estimates[0], w + 0.1 * e2 * x2)


def test_dlms_combine_is_convex():
    A = metropolis_weights(line(4))
    f = DiffusionLMS(A, 0.3, dim=1)
    rng = np.random.default_rng(1)
    for _ in range(30):
        X, d = rng.normal(size=(4, 1)), rng.normal(size=4)
        before = f.estimates.copy()
        f.step(X, d)
        adapted = before + 0.3 * (d - (before * X).sum(1))[:, None] * X
        # each combined estimate lies inside the hull of its neighbors' adapted estimates
        for k in range(4):
            nb = adapted[A[k] > 0, 0]
            assert nb.min() - 1e-12 <= f.estimates[k, 0] <= nb.max() + 1e-12


def test_dlms_converges_on_noiseless_linear_model():
    topo = default_topology()
    w_star = np.array([1.0, -0.5])
    params = sample_node_params(10, 1, noise_variance=0.0)
    s = generate_linear_stream(w_star, params, 5000, seed=3, input_variance=1.0)
    f = DiffusionLMS(metropolis_weights(topo), 0.01, dim=2)
    for n in range(s.steps):
        f.step(s.regressors[n], s.desired[n])
    assert np.linalg.norm(f.estimates - w_star, axis=1).max() <= 1e-3


def test_dlms_validation():
    f = DiffusionLMS(np.eye(2), 0.1, dim=2)
    with pytest.raises(ValueError):
        f.step(np.zeros((2, 3)), [0.0, 0.0])


# -- misc ---------------------------------------------------------------

def test_instantaneous_loss():
    assert instantaneous_loss(1.0, 1.0) == 0.0
    assert instantaneous_loss(2.0, 0.0) == 2.0
    assert instantaneous_loss(0.5, 0.2) == pytest.approx(0.045, abs=1e-15)
    np.testing.assert_allclose(instantaneous_loss(np.array([1.0, 2.0]), np.zeros(2)), [0.5, 2.0])


def test_make_learner():
    A = metropolis_weights(line(2))
    W = propagation_weights(A, None, 3)
    for name, cls in [("dklms", DKLMS), ("noncoop_klms", NonCooperativeKLMS),
                      ("centralized_klms", CentralizedKLMS), ("linear_dlms", DiffusionLMS)]:
        assert isinstance(make_learner(name, combination=A, weights=W, kernel=KP, step_size=0.5,
                                       capacity=3, dim=1), cls)
    with pytest.raises(ValueError):
        make_learner("rls", combination=A, weights=W, kernel=KP, step_size=0.5, capacity=3, dim=1)
