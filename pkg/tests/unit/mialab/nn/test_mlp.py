"""
Unit Tests for the MLP Kernel.

Forward passes are compared with a naive per-example loop; backward passes
with central finite differences.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from modules.mialab.core.exceptions import ShapeMismatchError, StaleCacheError
from modules.mialab.nn.gradcheck import check_gradients
from modules.mialab.nn.layers import linear_forward, softmax2
from modules.mialab.nn.mlp import MlpSpec, init_mlp, mlp_backward, mlp_forward


def _naive_forward(spec: MlpSpec, params: dict, x: np.ndarray) -> np.ndarray:
    rows = []
    for sample in x:
        h = sample
        for i in range(spec.n_layers):
            w = params[f"layer{i}.weight"]
            b = params[f"layer{i}.bias"]
            z = np.array([sum(h[r] * w[r, c] for r in range(w.shape[0])) + b[c] for c in range(w.shape[1])])
            h = np.array([max(v, 0.0) for v in z]) if i < spec.n_layers - 1 else z
        if spec.output_head == "softmax2":
            e = np.exp(h - h.max())
            h = e / e.sum()
        rows.append(h)
    return np.array(rows)


@pytest.fixture
def attack_spec() -> MlpSpec:
    return MlpSpec(layer_widths=[6, 5, 4, 2], output_head="softmax2")


class TestMlpSpec:
    """Tests for MLP layout validation."""

    def test_requires_hidden_layer(self):
        with pytest.raises(ValidationError):
            MlpSpec(layer_widths=[4, 2])

    def test_rejects_zero_width(self):
        with pytest.raises(ValidationError):
            MlpSpec(layer_widths=[4, 0, 2])

    def test_parameter_names(self):
        spec = MlpSpec(layer_widths=[3, 4, 2])
        assert spec.parameter_names("attack.") == [
            "attack.layer0.weight",
            "attack.layer0.bias",
            "attack.layer1.weight",
            "attack.layer1.bias",
        ]


class TestMlpForward:
    """Tests for the batch forward pass."""

    def test_zero_parameters_give_uniform_softmax(self, attack_spec):
        params = {k: np.zeros_like(v) for k, v in init_mlp(attack_spec, np.random.default_rng(0)).items()}
        out, _ = mlp_forward(attack_spec, params, np.random.default_rng(1).normal(size=(7, 6)))
        np.testing.assert_array_equal(out, 0.5)

    def test_identity_linear_layer_passes_input(self):
        x = np.random.default_rng(2).normal(size=(4, 3))
        np.testing.assert_array_equal(linear_forward(x, np.eye(3), np.zeros(3)), x)

    def test_matches_naive_loop(self, attack_spec):
        rng = np.random.default_rng(3)
        params = init_mlp(attack_spec, rng)
        params = {k: v + rng.normal(scale=0.1, size=v.shape) for k, v in params.items()}
        x = rng.normal(size=(5, 6))

        out, _ = mlp_forward(attack_spec, params, x)

        np.testing.assert_allclose(out, _naive_forward(attack_spec, params, x), rtol=0, atol=1e-10)

    def test_softmax_rows_are_probabilities(self, attack_spec):
        rng = np.random.default_rng(4)
        out, _ = mlp_forward(attack_spec, init_mlp(attack_spec, rng), rng.normal(scale=10.0, size=(50, 6)))
        assert np.all(out >= 0.0)
        np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-9)

    def test_input_width_mismatch(self, attack_spec):
        params = init_mlp(attack_spec, np.random.default_rng(0))
        with pytest.raises(ShapeMismatchError):
            mlp_forward(attack_spec, params, np.zeros((2, 5)))

    def test_glorot_bounds(self):
        spec = MlpSpec(layer_widths=[10, 30, 2])
        params = init_mlp(spec, np.random.default_rng(5))
        assert np.abs(params["layer0.weight"]).max() <= np.sqrt(6.0 / 40.0)
        assert np.all(params["layer0.bias"] == 0.0)


class TestMlpBackward:
    """Tests for hand-derived backpropagation."""

    @pytest.mark.parametrize("head", ["softmax2", "identity"])
    def test_parameter_gradients_match_finite_differences(self, head):
        rng = np.random.default_rng(6)
        spec = MlpSpec(layer_widths=[4, 6, 5, 2], output_head=head)
        params = init_mlp(spec, rng)
        params = {k: v + rng.normal(scale=0.1, size=v.shape) for k, v in params.items()}
        x = rng.normal(size=(5, 4))
        upstream = rng.normal(size=(5, 2))

        def loss(p):
            out, _ = mlp_forward(spec, p, x)
            return float((out * upstream).sum())

        _, cache = mlp_forward(spec, params, x)
        grads, _ = mlp_backward(spec, params, cache, upstream)
        report = check_gradients(loss, params, grads)

        assert max(report.values()) < 1e-4

    def test_input_gradient_matches_finite_differences(self, attack_spec):
        rng = np.random.default_rng(7)
        params = init_mlp(attack_spec, rng)
        x = rng.normal(size=(3, 6))
        upstream = rng.normal(size=(3, 2))
        _, cache = mlp_forward(attack_spec, params, x)
        _, grad_x = mlp_backward(attack_spec, params, cache, upstream)
        h = 1e-5

        numeric = np.zeros_like(x)
        for idx in np.ndindex(x.shape):
            xp, xm = x.copy(), x.copy()
            xp[idx] += h
            xm[idx] -= h
            numeric[idx] = (
                (mlp_forward(attack_spec, params, xp)[0] * upstream).sum()
                - (mlp_forward(attack_spec, params, xm)[0] * upstream).sum()
            ) / (2 * h)

        np.testing.assert_allclose(grad_x, numeric, rtol=1e-4, atol=1e-8)

    def test_zero_upstream_gives_zero_gradients(self, attack_spec):
        rng = np.random.default_rng(8)
        params = init_mlp(attack_spec, rng)
        _, cache = mlp_forward(attack_spec, params, rng.normal(size=(4, 6)))
        grads, grad_x = mlp_backward(attack_spec, params, cache, np.zeros((4, 2)))
        assert all(np.all(g == 0.0) for g in grads.values())
        assert np.all(grad_x == 0.0)

    def test_gradients_are_linear_in_upstream(self, attack_spec):
        rng = np.random.default_rng(9)
        params = init_mlp(attack_spec, rng)
        _, cache = mlp_forward(attack_spec, params, rng.normal(size=(4, 6)))
        upstream = rng.normal(size=(4, 2))
        single, _ = mlp_backward(attack_spec, params, cache, upstream)
        double, _ = mlp_backward(attack_spec, params, cache, 2.0 * upstream)
        for name in single:
            np.testing.assert_allclose(double[name], 2.0 * single[name], rtol=1e-12, atol=1e-15)

    def test_stale_cache_is_rejected(self, attack_spec):
        rng = np.random.default_rng(10)
        params = init_mlp(attack_spec, rng)
        _, cache = mlp_forward(attack_spec, params, rng.normal(size=(4, 6)))
        with pytest.raises(StaleCacheError):
            mlp_backward(attack_spec, params, cache, np.zeros((3, 2)))

    def test_cache_from_other_network_is_rejected(self, attack_spec):
        rng = np.random.default_rng(11)
        other = MlpSpec(layer_widths=[6, 3, 2], output_head="softmax2")
        _, cache = mlp_forward(other, init_mlp(other, rng), rng.normal(size=(2, 6)))
        with pytest.raises(StaleCacheError):
            mlp_backward(attack_spec, init_mlp(attack_spec, rng), cache, np.zeros((2, 2)))


class TestSoftmax2:
    """Tests for the two-way softmax."""

    def test_large_logits_are_stable(self):
        out = softmax2(np.array([[1000.0, -1000.0], [0.0, 0.0]]))
        np.testing.assert_allclose(out, [[1.0, 0.0], [0.5, 0.5]])
