import numpy as np
import pytest

import signhash as sh
from signhash.model import ModelConfig, init_params
from signhash.objective import (
    LossBreakdown,
    LossConfig,
    batch_gradients,
    batch_loss,
    quantization_error,
    theta,
    triplet_hinge,
)
from signhash.triplets import Triplet, VIRTUAL


def fixture_graph():
    """Small graph guaranteed to yield both real and virtual triplets."""
    edges = [
        (0, 1, 1), (0, 2, -1), (1, 2, -1), (1, 3, 1), (2, 3, -1),
        (3, 4, 1), (4, 5, -1), (5, 6, 1), (6, 7, -1), (2, 7, 1),
        (8, 9, 1),  # isolated positive pair -> virtual triplets
    ]
    return sh.build_graph(edges)


def make_setup(seed, loss_config=None):
    graph = fixture_graph()
    corpus = sh.build_triplets(graph)
    assert corpus.t_real and corpus.t_virtual
    config = ModelConfig(embed_dim=4, hidden_dims=(6,), code_dim=4, seed=seed)
    params = init_params(graph.num_nodes, config)
    rng = np.random.default_rng(seed)
    params.x0[:] = rng.normal(scale=0.5, size=4)
    loss_config = loss_config or LossConfig(
        margin=2.0, virtual_margin=1.0, quant_weight=0.7, reg_weight=1e-3
    )
    rng.shuffle(corpus.t_real)
    batch = corpus.t_real[:8] + corpus.t_virtual[:4]
    return params, batch, loss_config


# ------------------------------------------------------------- primitives


def test_theta_all_ones():
    ones = np.ones(8)
    assert theta(ones, ones) == 4.0


def test_theta_orthogonal():
    assert theta(np.array([1.0, 1, -1, -1]), np.array([1.0, -1, 1, -1])) == 0.0


def test_theta_length_mismatch():
    with pytest.raises(ValueError):
        theta(np.ones(3), np.ones(4))


def test_hinge_boundary_exactly_zero():
    # theta gap exactly equal to the margin sits on the hinge boundary
    x_i = np.array([2.0, 0.0, 0.0, 0.0])
    x_j = np.array([5.0, 0.0, 0.0, 0.0])
    x_k = np.array([2.0, 0.0, 0.0, 0.0])
    assert theta(x_i, x_j) == 5.0 and theta(x_i, x_k) == 2.0
    assert triplet_hinge(x_i, x_j, x_k, margin=3.0) == 0.0


def test_hinge_violated_surplus():
    x_i = np.array([2.0, 0.0, 0.0, 0.0])
    x_j = np.array([2.0, 0.0, 0.0, 0.0])   # theta_ij = 2
    x_k = np.array([5.0, 0.0, 0.0, 0.0])   # theta_ik = 5
    assert triplet_hinge(x_i, x_j, x_k, margin=3.0) == 6.0


def test_hinge_zero_margin_identical_partners():
    rng = np.random.default_rng(0)
    x_i, x_j = rng.normal(size=4), rng.normal(size=4)
    assert triplet_hinge(x_i, x_j, x_j, margin=0.0) == 0.0


def test_hinge_rejects_negative_margin():
    with pytest.raises(ValueError):
        triplet_hinge(np.ones(2), np.ones(2), np.ones(2), margin=-1.0)


def test_quantization_exact_codes():
    assert quantization_error(np.array([1.0, -1.0, 1.0])) == 0.0


def test_quantization_hand_value():
    assert quantization_error(np.array([0.5, -0.5])) == 0.5


def test_quantization_shrinks_toward_sign():
    x = np.array([0.3, -0.8, 2.0])
    b = np.where(x >= 0, 1.0, -1.0)
    values = [quantization_error(x + t * (b - x), b) for t in (0.0, 0.25, 0.5, 1.0)]
    assert values == sorted(values, reverse=True)


def test_quantization_length_mismatch():
    with pytest.raises(ValueError):
        quantization_error(np.ones(3), np.ones(4))


# ------------------------------------------------------------- batch loss


def test_batch_loss_zero_params_closed_form():
    params, batch, _ = make_setup(seed=0)
    for _, t in params.tensors():
        t[...] = 0.0
    cfg = LossConfig(margin=2.0, virtual_margin=1.0, quant_weight=0.7, reg_weight=1e-3)
    n_real = sum(1 for t in batch if t.k != VIRTUAL)
    n_virtual = len(batch) - n_real
    distinct = {n for t in batch for n in t if n != VIRTUAL}
    # all codes are zero: every hinge returns its margin, each distinct
    # node contributes the full code length to the quantization term
    got = batch_loss(batch, params, cfg)
    assert got.triplet == pytest.approx(n_real * cfg.margin)
    assert got.virtual == pytest.approx(n_virtual * cfg.virtual_margin)
    assert got.quantization == pytest.approx(cfg.quant_weight * len(distinct) * 4)
    assert got.regularization == 0.0
    assert got.total == pytest.approx(got.triplet + got.virtual + got.quantization)


def test_batch_loss_single_triplet_term_isolation():
    params, _, _ = make_setup(seed=1)
    cfg = LossConfig(margin=2.0, virtual_margin=1.0, quant_weight=0.0, reg_weight=0.0)
    batch = [Triplet(0, 1, 2)]
    from signhash.model import forward

    expected = triplet_hinge(
        forward(params, 0), forward(params, 1), forward(params, 2), cfg.margin
    )
    got = batch_loss(batch, params, cfg)
    assert got.total == pytest.approx(expected)
    assert got.quantization == 0.0 and got.regularization == 0.0


def test_batch_loss_order_invariant():
    params, batch, cfg = make_setup(seed=2)
    forward_order = batch_loss(batch, params, cfg)
    backward_order = batch_loss(batch[::-1], params, cfg)
    assert forward_order == backward_order


def test_batch_loss_nonnegative_and_consistent():
    for seed in range(5):
        params, batch, cfg = make_setup(seed=seed)
        got = batch_loss(batch, params, cfg)
        assert got.triplet >= 0 and got.virtual >= 0
        assert got.quantization >= 0 and got.regularization >= 0
        assert got.total == pytest.approx(
            got.triplet + got.virtual + got.quantization + got.regularization
        )


def test_batch_loss_empty_batch():
    params, _, cfg = make_setup(seed=3)
    with pytest.raises(ValueError):
        batch_loss([], params, cfg)


def test_batch_loss_quant_all_nodes_flag():
    params, batch, _ = make_setup(seed=4)
    part = LossConfig(margin=2.0, virtual_margin=1.0, quant_weight=1.0, reg_weight=0.0)
    full = LossConfig(
        margin=2.0, virtual_margin=1.0, quant_weight=1.0, reg_weight=0.0,
        quant_all_nodes=True,
    )
    from signhash.model import forward_batch, sign_vector

    x_all = forward_batch(params, np.arange(params.num_nodes))
    expect_full = float(np.sum((sign_vector(x_all) - x_all) ** 2))
    got_part = batch_loss(batch, params, part)
    got_full = batch_loss(batch, params, full)
    assert got_full.quantization == pytest.approx(expect_full)
    assert got_full.quantization > got_part.quantization
    assert got_full.triplet == got_part.triplet


def test_loss_config_validation():
    LossConfig(margin=4.0, virtual_margin=2.0).validate(code_dim=4)
    with pytest.raises(ValueError):
        LossConfig(margin=5.0).validate(code_dim=4)
    with pytest.raises(ValueError):
        LossConfig(margin=1.0, virtual_margin=-0.5).validate(code_dim=4)
    with pytest.raises(ValueError):
        LossConfig(margin=1.0, virtual_margin=1.0, quant_weight=-1.0).validate(4)


# -------------------------------------------------------------- gradients


def finite_difference_grads(batch, params, cfg, h=1e-5):
    grads = {}
    for name, tensor in params.tensors():
        num = np.zeros_like(tensor)
        flat_t, flat_n = tensor.reshape(-1), num.reshape(-1)
        for idx in range(flat_t.size):
            original = flat_t[idx]
            flat_t[idx] = original + h
            up = batch_loss(batch, params, cfg).total
            flat_t[idx] = original - h
            down = batch_loss(batch, params, cfg).total
            flat_t[idx] = original
            flat_n[idx] = (up - down) / (2 * h)
        grads[name] = num
    return grads


def analytic_as_dict(grads, num_nodes):
    out = {"embed": grads.dense_embed(num_nodes)}
    for i, (w, b) in enumerate(zip(grads.weights, grads.biases)):
        out[f"w{i}"], out[f"b{i}"] = w, b
    out["hash_w"], out["hash_b"], out["x0"] = grads.hash_w, grads.hash_b, grads.x0
    return out


def relative_error(a, b):
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-6)
    return np.linalg.norm(a - b) / denom


def test_gradients_match_finite_differences():
    params, batch, cfg = make_setup(seed=11)
    grads, _ = batch_gradients(batch, params, cfg)
    analytic = analytic_as_dict(grads, params.num_nodes)
    numeric = finite_difference_grads(batch, params, cfg)
    for name in numeric:
        assert relative_error(numeric[name], analytic[name]) < 1e-4, name


def test_gradients_zero_params_analytic_case():
    params, batch, _ = make_setup(seed=12)
    for _, t in params.tensors():
        t[...] = 0.0
    cfg = LossConfig(margin=2.0, virtual_margin=1.0, quant_weight=0.7, reg_weight=0.0)
    grads, _ = batch_gradients(batch, params, cfg)
    # with all codes at zero the hinge gradients vanish; only the
    # quantization pull -2*eta per component survives, and it can reach
    # nothing but the code-layer bias through zero weights
    distinct = {n for t in batch for n in t if n != VIRTUAL}
    assert np.allclose(grads.embed_rows, 0)
    for w, b in zip(grads.weights, grads.biases):
        assert np.allclose(w, 0) and np.allclose(b, 0)
    assert np.allclose(grads.hash_w, 0)
    assert np.allclose(grads.x0, 0)
    assert np.allclose(grads.hash_b, -2 * cfg.quant_weight * len(distinct))


def test_gradients_linear_in_quant_weight():
    params, batch, _ = make_setup(seed=13)
    base = LossConfig(margin=2.0, virtual_margin=1.0, quant_weight=0.0, reg_weight=0.0)
    one = LossConfig(margin=2.0, virtual_margin=1.0, quant_weight=1.0, reg_weight=0.0)
    two = LossConfig(margin=2.0, virtual_margin=1.0, quant_weight=2.0, reg_weight=0.0)
    g0 = analytic_as_dict(batch_gradients(batch, params, base)[0], params.num_nodes)
    g1 = analytic_as_dict(batch_gradients(batch, params, one)[0], params.num_nodes)
    g2 = analytic_as_dict(batch_gradients(batch, params, two)[0], params.num_nodes)
    for name in g0:
        quant_part_1 = g1[name] - g0[name]
        quant_part_2 = g2[name] - g0[name]
        assert np.allclose(quant_part_2, 2 * quant_part_1, atol=1e-12)


def test_gradient_of_total_is_sum_of_term_gradients():
    # the three weighted terms must contribute additively, no cross talk
    params, batch, _ = make_setup(seed=14)

    def config(quant_weight=0.0, reg_weight=0.0):
        return LossConfig(
            margin=2.0, virtual_margin=1.0,
            quant_weight=quant_weight, reg_weight=reg_weight,
        )

    g_full = analytic_as_dict(
        batch_gradients(batch, params, config(0.7, 1e-3))[0], params.num_nodes
    )
    g_hinge = analytic_as_dict(batch_gradients(batch, params, config())[0], params.num_nodes)
    g_quant = analytic_as_dict(batch_gradients(batch, params, config(quant_weight=0.7))[0], params.num_nodes)
    g_reg = analytic_as_dict(batch_gradients(batch, params, config(reg_weight=1e-3))[0], params.num_nodes)
    for name in g_full:
        assert np.allclose(
            g_full[name], g_quant[name] + g_reg[name] - g_hinge[name], atol=1e-12
        ), name


def test_single_step_decreases_active_triplet_loss():
    params, _, _ = make_setup(seed=15)
    cfg = LossConfig(margin=3.0, virtual_margin=1.0, quant_weight=0.0, reg_weight=0.0)
    batch = [Triplet(0, 1, 2)]
    before = batch_loss(batch, params, cfg).total
    assert before > 0  # hinge active at this margin
    grads, _ = batch_gradients(batch, params, cfg)
    from signhash.train import apply_update

    apply_update(params, grads, lr=1e-3)
    after = batch_loss(batch, params, cfg).total
    assert after < before
