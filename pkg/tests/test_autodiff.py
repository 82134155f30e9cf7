import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logo_te.autodiff import (Adam, AdamState, Tensor, adam_step, check_gradients, load_checkpoint, no_grad,
                              save_checkpoint, xavier_bound, xavier_init)
from logo_te.autodiff import ops
from logo_te.autodiff.tensor import make
from logo_te.errors import NonFiniteLoss, ShapeMismatch, ZeroExtent


def leaf(data):
    return Tensor(np.asarray(data, dtype=np.float64), requires_grad=True)


# xavier

def test_xavier_bound_4x4():
    t = xavier_init((4, 4), seed=3)
    b = np.sqrt(6 / 8)
    assert xavier_bound((4, 4)) == pytest.approx(b)
    assert np.all(np.abs(t.data) <= b)
    assert b == pytest.approx(0.8660, abs=1e-4)


def test_xavier_deterministic():
    assert np.array_equal(xavier_init((5, 3), 7).data, xavier_init((5, 3), 7).data)
    assert not np.array_equal(xavier_init((5, 3), 7).data, xavier_init((5, 3), 8).data)


def test_xavier_mean_large():
    t = xavier_init((1000, 1000), seed=0)
    # oracle: uniform on [-b, b] has mean 0 and variance b^2/3
    b = xavier_bound((1000, 1000))
    assert abs(t.data.mean()) < 0.01
    assert t.data.var() == pytest.approx(b * b / 3, rel=0.01)


def test_xavier_1d_fans():
    assert xavier_bound((10,)) == pytest.approx(np.sqrt(6 / 20))


def test_xavier_zero_extent():
    with pytest.raises(ZeroExtent):
        xavier_init((3, 0), 0)
    with pytest.raises(ZeroExtent):
        xavier_init((), 0)


# adam

def test_adam_first_step_unit_grad():
    p = np.full(4, 0.5)
    new, state = adam_step(p, np.ones(4), AdamState.zeros_like(p), lr=0.01)
    assert np.allclose(p - new, 0.01, atol=1e-9)
    assert state.step == 1


def test_adam_zero_grad():
    p = np.arange(3.0)
    new, state = adam_step(p, np.zeros(3), AdamState.zeros_like(p), lr=0.01)
    assert np.array_equal(new, p)
    assert state.step == 1


def test_adam_weight_decay_hand():
    # hand-evaluated recurrence: g = 0 + 0.5*2 = 1, m = 0.1, v = 0.001, m_hat = 1, v_hat = 1
    p = np.array([2.0])
    new, _ = adam_step(p, np.zeros(1), AdamState.zeros_like(p), lr=0.01, weight_decay=0.5)
    expected = 2.0 - 0.01 * 1.0 / (1.0 + 1e-8)
    assert new[0] == pytest.approx(expected, abs=1e-15)
    assert new[0] == pytest.approx(1.99, abs=1e-6)


def test_adam_two_steps_against_loop():
    p = np.array([1.0, -2.0])
    grads = [np.array([0.3, -1.0]), np.array([-0.2, 0.5])]
    state = AdamState.zeros_like(p)
    q = p.copy()
    for g in grads:
        q, state = adam_step(q, g, state, lr=0.1)
    # independent scalar re-derivation
    for i in range(2):
        m = v = 0.0
        x = p[i]
        for k, g in enumerate(grads, 1):
            m = 0.9 * m + 0.1 * g[i]
            v = 0.999 * v + 0.001 * g[i] ** 2
            x -= 0.1 * (m / (1 - 0.9 ** k)) / (np.sqrt(v / (1 - 0.999 ** k)) + 1e-8)
        assert q[i] == pytest.approx(x, abs=1e-14)


def test_adam_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        adam_step(np.zeros(3), np.zeros(2), AdamState.zeros_like(np.zeros(3)), lr=0.1)


def test_adam_deterministic_and_pure():
    p, g = np.array([1.0, 2.0]), np.array([0.5, -0.5])
    s = AdamState.zeros_like(p)
    a = adam_step(p, g, s, 0.01, 0.1)
    b = adam_step(p, g, s, 0.01, 0.1)
    assert np.array_equal(a[0], b[0]) and s.step == 0 and not s.m.any()


def test_adam_class_updates_in_place():
    w = leaf([1.0, 1.0])
    opt = Adam({"w": w}, lr=0.1)
    ops.total(ops.mul(w, w)).backward()
    opt.step()
    assert np.all(w.data < 1.0)
    opt.zero_grad()
    assert w.grad is None


# gradient check

def test_gradcheck_square():
    x = leaf([3.0])
    err = check_gradients(lambda: ops.total(ops.mul(x, x)), [x], eps=1e-5)
    assert err < 1e-6


def test_gradcheck_constant():
    x = leaf([3.0])
    assert check_gradients(lambda: ops.total(ops.mul(Tensor([0.0]), x)) + 5.0, [x]) == 0.0


def test_gradcheck_detects_corruption():
    x = leaf([3.0])

    def bad_square(a):
        return make(a.data ** 2, (a,), lambda g: (g * 4.0 * a.data,))  # 2x the true gradient

    err = check_gradients(lambda: ops.total(bad_square(x)), [x])
    assert err == pytest.approx(0.5, abs=1e-6)


def test_gradcheck_nonfinite():
    x = leaf([0.0])
    with pytest.raises(NonFiniteLoss):
        check_gradients(lambda: ops.total(make(np.log(x.data * 0.0 + np.nan), (x,), lambda g: (g,))), [x])


rng = np.random.default_rng(0)


def away_from_zero(shape):
    v = rng.uniform(0.2, 1.5, size=shape)
    return v * rng.choice([-1.0, 1.0], size=shape)


PRIMITIVES = {
    "matmul": (lambda a, b: ops.matmul(a, b), [(3, 4), (4, 2)]),
    "add": (lambda a, b: ops.add(a, b), [(3, 4), (4,)]),
    "mul": (lambda a, b: ops.mul(a, b), [(3, 4), (3, 4)]),
    "sub": (lambda a, b: ops.sub(a, b), [(2, 3), (1, 3)]),
    "tanh": (lambda a: ops.tanh(a), [(3, 3)]),
    "sigmoid": (lambda a: ops.sigmoid(a), [(3, 3)]),
    "leaky": (lambda a: ops.leaky_relu(a, 0.23), [(4, 3)]),
    "gather": (lambda a: ops.gather_rows(a, [0, 2, 2, 1]), [(3, 2)]),
    "segment_sum": (lambda a: ops.segment_sum(a, [0, 2, 2, 1, 0], 4), [(5, 3)]),
    "conv1d": (lambda x, w, b: ops.conv1d_same(x, w, b), [(2, 2, 5), (3, 2, 3), (3,)]),
    "concat": (lambda a, b: ops.concat_rows([a, b]), [(2, 3), (1, 3)]),
    "stack": (lambda a, b: ops.stack([a, b], axis=1), [(2, 3), (2, 3)]),
    "reshape_T": (lambda a: ops.transpose(ops.reshape(a, (3, 2))), [(2, 3)]),
}


@pytest.mark.parametrize("name", sorted(PRIMITIVES))
def test_primitive_gradients(name):
    fn, shapes = PRIMITIVES[name]
    params = [leaf(away_from_zero(s)) for s in shapes]
    weights = Tensor(rng.normal(size=fn(*params).shape))  # random projection to a scalar
    err = check_gradients(lambda: ops.total(ops.mul(fn(*params), weights)), params)
    assert err < 1e-4, name


def test_softmax_ce_gradient():
    logits = leaf(rng.normal(size=(4, 6)))
    err = check_gradients(lambda: ops.softmax_cross_entropy(logits, [0, 5, 2, 2]), [logits])
    assert err < 1e-4


def test_softmax_ce_value():
    logits = Tensor(np.zeros((1, 10)))
    assert float(ops.softmax_cross_entropy(logits, [3]).data) == pytest.approx(np.log(10))


def test_conv1d_matches_direct_loop():
    x = rng.normal(size=(2, 2, 6))
    w = rng.normal(size=(3, 2, 3))
    out = ops.conv1d_same(Tensor(x), Tensor(w)).data
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1)))
    for b in range(2):
        for o in range(3):
            for j in range(6):
                assert out[b, o, j] == pytest.approx(np.sum(xp[b, :, j:j + 3] * w[o]))


def test_shared_subgraph_accumulates():
    x = leaf([2.0])
    y = ops.mul(x, x)
    ops.total(ops.add(y, y)).backward()
    assert x.grad[0] == pytest.approx(8.0)


def test_no_grad_records_nothing():
    x = leaf([1.0])
    with no_grad():
        y = ops.mul(x, x)
    assert y._backward is None


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4), st.integers(0, 10_000))
def test_matmul_gradient_property(n, k, m, seed):
    r = np.random.default_rng(seed)
    a, b = leaf(r.normal(size=(n, k))), leaf(r.normal(size=(k, m)))
    w = Tensor(r.normal(size=(n, m)))
    assert check_gradients(lambda: ops.total(ops.mul(ops.matmul(a, b), w)), [a, b]) < 1e-4


# checkpoint

def test_checkpoint_round_trip(tmp_path):
    tensors = {"a": np.arange(6.0).reshape(2, 3), "b": np.array(3.5), "c.d": np.random.default_rng(1).normal(size=4)}
    path = str(tmp_path / "x.ckpt")
    save_checkpoint(path, tensors, {"k": 1})
    back, meta = load_checkpoint(path)
    assert meta == {"k": 1}
    for k, v in tensors.items():
        assert back[k].shape == v.shape and np.array_equal(back[k], v)


def test_checkpoint_rejects_garbage(tmp_path):
    p = tmp_path / "bad"
    p.write_bytes(b"nope\n")
    with pytest.raises(ValueError):
        load_checkpoint(str(p))
