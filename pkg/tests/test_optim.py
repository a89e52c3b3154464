import numpy as np
import pytest

from sparkprop.optim import AdamW, adamw_step
from sparkprop.tensor import Tensor


def make_param(v):
    return Tensor(np.asarray(v, dtype=np.float64), requires_grad=True)


def test_zero_grad_zero_decay_is_identity():
    p = make_param([1.0, -2.0, 3.0])
    opt = AdamW({"p": p}, lr=0.1, weight_decay=0.0)
    assert adamw_step({"p": p}, {"p": np.zeros(3)}, opt)
    np.testing.assert_array_equal(p.data, [1.0, -2.0, 3.0])
    assert opt.t == 1


def test_first_step_hand_evaluated():
    # p=1, g=1, lr=0.1, betas (0.9, 0.95), eps 1e-8, wd 0: bias-corrected
    # moments are both exactly 1, so p -> 1 - 0.1 * 1/(1 + 1e-8)
    p = make_param([1.0])
    opt = AdamW({"p": p}, lr=0.1, betas=(0.9, 0.95), eps=1e-8, weight_decay=0.0)
    assert adamw_step({"p": p}, {"p": np.array([1.0])}, opt)
    np.testing.assert_allclose(p.data, [0.9], atol=1e-8)


def test_decoupled_decay_formula():
    # wd=0.1, g=0, lr=0.1, p=1 -> p = 1 - 0.1*0.1*1 = 0.99
    p = make_param([1.0])
    opt = AdamW({"p": p}, lr=0.1, weight_decay=0.1)
    assert adamw_step({"p": p}, {"p": np.zeros(1)}, opt)
    np.testing.assert_allclose(p.data, [0.99])


def test_nonfinite_grad_skips_step():
    p = make_param([1.0, 2.0])
    opt = AdamW({"p": p}, lr=0.1)
    applied = adamw_step({"p": p}, {"p": np.array([1.0, np.nan])}, opt)
    assert not applied
    np.testing.assert_array_equal(p.data, [1.0, 2.0])
    assert opt.t == 0
    np.testing.assert_array_equal(opt.m["p"], np.zeros(2))


def test_shape_mismatch_rejected():
    p = make_param([1.0, 2.0])
    opt = AdamW({"p": p})
    with pytest.raises(ValueError):
        adamw_step({"p": p}, {"p": np.zeros(3)}, opt)


def test_missing_grad_rejected():
    p = make_param([1.0])
    opt = AdamW({"p": p})
    with pytest.raises(KeyError):
        adamw_step({"p": p}, {}, opt)


def test_converges_on_quadratic():
    rng = np.random.default_rng(0)
    target = rng.standard_normal(8)
    p = make_param(np.zeros(8))
    opt = AdamW({"p": p}, lr=0.05)
    for _ in range(500):
        p.grad = 2 * (p.data - target)
        assert opt.step()
        opt.zero_grad()
    np.testing.assert_allclose(p.data, target, atol=5e-3)


def test_state_roundtrip_resumes_identically():
    rng = np.random.default_rng(1)
    grads = [rng.standard_normal(4) for _ in range(20)]

    def run(n, p, opt):
        for g in grads[:n]:
            p.grad = g.copy()
            opt.step()
            opt.zero_grad()

    p1 = make_param(np.ones(4))
    o1 = AdamW({"p": p1}, lr=0.01, weight_decay=0.01)
    run(20, p1, o1)

    p2 = make_param(np.ones(4))
    o2 = AdamW({"p": p2}, lr=0.01, weight_decay=0.01)
    run(10, p2, o2)
    state = {k: v.copy() for k, v in o2.state_arrays().items()}
    t = o2.t

    p3 = make_param(p2.data.copy())
    o3 = AdamW({"p": p3}, lr=0.01, weight_decay=0.01)
    o3.load_state_arrays(state, t)
    for g in grads[10:]:
        p3.grad = g.copy()
        o3.step()
        o3.zero_grad()
    np.testing.assert_array_equal(p3.data, p1.data)
