import time

import numpy as np
import pytest

from roboserv.vision.fixture import evaluate_accuracy, fixture_network
from roboserv.vision.layers import (
    Activation,
    Conv,
    FullyConnected,
    Pool,
    ShapeError,
    Softmax,
    apply_activation,
    conv_forward,
    fc_forward,
    pool_forward,
    softmax,
)
from roboserv.vision.network import Network, infer
from roboserv.vision.network_io import NetworkFormatError, dumps_network, load_network, loads_network, save_network
from roboserv.vision.shapes import IMAGE_SIZE, SHAPE_LABELS, fixture_image


def naive_conv(x, weights, bias, stride, padding):
    c, h, w = x.shape
    f, _, kh, kw = weights.shape
    padded = np.zeros((c, h + 2 * padding, w + 2 * padding))
    padded[:, padding:padding + h, padding:padding + w] = x
    oh = (h + 2 * padding - kh) // stride + 1
    ow = (w + 2 * padding - kw) // stride + 1
    out = np.zeros((f, oh, ow))
    for k in range(f):
        for i in range(oh):
            for j in range(ow):
                total = bias[k]
                for ch in range(c):
                    for a in range(kh):
                        for b in range(kw):
                            total += weights[k, ch, a, b] * padded[ch, i * stride + a, j * stride + b]
                out[k, i, j] = total
    return out


def naive_pool(x, window, stride):
    c, h, w = x.shape
    oh, ow = (h - window) // stride + 1, (w - window) // stride + 1
    out = np.zeros((c, oh, ow))
    for ch in range(c):
        for i in range(oh):
            for j in range(ow):
                best = -np.inf
                for a in range(window):
                    for b in range(window):
                        best = max(best, x[ch, i * stride + a, j * stride + b])
                out[ch, i, j] = best
    return out


def _close(actual, expected):
    scale = max(1.0, float(np.abs(expected).max()))
    return np.allclose(actual, expected, rtol=1e-12, atol=1e-12 * scale)


def _random_conv_case(rng):
    """A conforming (input, conv layer) pair with small random dimensions"""
    while True:
        k, s, p = int(rng.integers(1, 4)), int(rng.integers(1, 3)), int(rng.integers(0, 2))
        oh, ow = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        h, w = (oh - 1) * s + k - 2 * p, (ow - 1) * s + k - 2 * p
        if h >= 1 and w >= 1:
            break
    c, f = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    layer = Conv(rng.normal(size=(f, c, k, k)), rng.normal(size=f), stride=s, padding=p)
    return rng.normal(size=(c, h, w)), layer


def test_conv_matches_nested_loops():
    rng = np.random.default_rng(10)
    for _ in range(500):
        x, layer = _random_conv_case(rng)
        expected = naive_conv(x, layer.weights, layer.bias, layer.stride, layer.padding)
        actual = conv_forward(x, layer)
        assert actual.shape == expected.shape
        assert _close(actual, expected)


def test_pool_matches_nested_loops():
    rng = np.random.default_rng(11)
    for _ in range(500):
        window, stride = int(rng.integers(1, 4)), int(rng.integers(1, 3))
        oh, ow = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        x = rng.normal(size=(int(rng.integers(1, 4)), (oh - 1) * stride + window, (ow - 1) * stride + window))
        layer = Pool(window, stride)
        assert np.array_equal(pool_forward(x, layer), naive_pool(x, window, stride))


def test_fc_matches_nested_loops():
    rng = np.random.default_rng(12)
    for _ in range(500):
        shape = tuple(int(d) for d in rng.integers(1, 5, size=3))
        x = rng.normal(size=shape)
        n_in, n_out = int(np.prod(shape)), int(rng.integers(1, 6))
        layer = FullyConnected(rng.normal(size=(n_out, n_in)), rng.normal(size=n_out))
        flat = x.reshape(-1)
        expected = np.array([layer.bias[o] + sum(layer.weights[o, i] * flat[i] for i in range(n_in))
                             for o in range(n_out)])
        assert _close(fc_forward(x, layer), expected)


def test_conv_is_linear_without_bias():
    rng = np.random.default_rng(13)
    for _ in range(100):
        x, layer = _random_conv_case(rng)
        layer = Conv(layer.weights, np.zeros(layer.num_filters), layer.stride, layer.padding)
        y = rng.normal(size=x.shape)
        alpha, beta = rng.normal(size=2)
        lhs = conv_forward(alpha * x + beta * y, layer)
        rhs = alpha * conv_forward(x, layer) + beta * conv_forward(y, layer)
        assert np.allclose(lhs, rhs, rtol=0, atol=1e-9)


def test_pool_bounds_and_constant_idempotence():
    rng = np.random.default_rng(14)
    constant = np.full((2, 6, 6), 3.25)
    assert np.all(pool_forward(constant, Pool(2, 2)) == 3.25)
    x = rng.normal(size=(3, 8, 8))
    out = pool_forward(x, Pool(2, 2))
    assert np.all(out <= x.max())
    for i in range(4):
        for j in range(4):
            covered = x[:, 2 * i:2 * i + 2, 2 * j:2 * j + 2]
            assert np.all(out[:, i, j] >= covered.max(axis=(1, 2)))


def test_softmax_sums_to_one_and_is_stable():
    rng = np.random.default_rng(15)
    for _ in range(200):
        p = softmax(rng.normal(scale=50.0, size=int(rng.integers(1, 10))))
        assert abs(p.sum() - 1.0) <= 1e-9
        assert np.all(p >= 0)
    assert np.all(np.isfinite(softmax(np.array([1000.0, -1000.0]))))


def test_activations():
    x = np.array([-2.0, 0.0, 3.0])
    assert np.array_equal(apply_activation(x, "relu"), [0.0, 0.0, 3.0])
    assert apply_activation(np.array([0.0]), "sigmoid")[0] == pytest.approx(0.5)
    assert apply_activation(np.array([1.0]), "tanh")[0] == pytest.approx(np.tanh(1.0))
    with pytest.raises(ValueError):
        Activation("gelu")


def _small_network(rng):
    layers = [
        Conv(rng.normal(size=(2, 1, 3, 3)), rng.normal(size=2), padding=1),
        Activation("relu"),
        Pool(2, 2),
        FullyConnected(rng.normal(size=(3, 2 * 4 * 4)), rng.normal(size=3)),
        Softmax(),
    ]
    return Network(layers, ["a", "b", "c"], (1, 8, 8))


def test_infer_equals_layer_composition():
    rng = np.random.default_rng(16)
    net = _small_network(rng)
    image = rng.uniform(size=(8, 8))
    x = image[None, :, :]
    x = conv_forward(x, net.layers[0])
    x = apply_activation(x, "relu")
    x = pool_forward(x, net.layers[2])
    x = fc_forward(x, net.layers[3])
    x = softmax(x)
    labels = infer(net, image)
    assert [l.name for l in labels] == [net.labels[i] for i in np.argsort(-x, kind="stable")]
    for label in labels:
        assert label.score == x[net.labels.index(label.name)]
    assert abs(sum(l.score for l in labels) - 1.0) <= 1e-9


def test_network_rejects_nonconforming_layers():
    rng = np.random.default_rng(17)
    with pytest.raises(ShapeError):
        Network([Conv(rng.normal(size=(2, 1, 3, 3)), np.zeros(2)), FullyConnected(np.zeros((3, 10)), np.zeros(3))],
                ["a", "b", "c"], (1, 8, 8))
    with pytest.raises(ShapeError):
        Network([FullyConnected(np.zeros((2, 64)), np.zeros(2))], ["a", "b", "c"], (1, 8, 8))
    with pytest.raises(ShapeError):
        Conv(np.zeros((2, 3, 3)), np.zeros(2))
    with pytest.raises(ShapeError):
        Pool(3, 2).output_shape((1, 8, 8))
    net = _small_network(rng)
    with pytest.raises(ShapeError):
        net.forward(np.zeros((9, 9)))


def test_network_file_reload_is_bit_exact(tmp_path):
    rng = np.random.default_rng(18)
    net = _small_network(rng)
    path = save_network(net, tmp_path / "net.json")
    loaded = load_network(path)
    assert dumps_network(loaded) == path.read_bytes()
    image = rng.uniform(size=(8, 8))
    assert np.array_equal(loaded.forward(image), net.forward(image))


def test_network_file_errors():
    net = _small_network(np.random.default_rng(19))
    data = dumps_network(net)
    with pytest.raises(NetworkFormatError) as info:
        loads_network(data[:40])
    assert info.value.offset is not None
    with pytest.raises(NetworkFormatError):
        loads_network(data.replace(b"roboserv-cnn", b"other-cnn"))
    with pytest.raises(NetworkFormatError):
        loads_network(b'{"format": "roboserv-cnn", "version": 1, "labels": [], "input_dims": [1, 8, 8], '
                      b'"layers": [{"kind": "dropout"}]}')


def test_fixture_images_are_classified():
    net = fixture_network()
    assert net.input_dims == (1, IMAGE_SIZE, IMAGE_SIZE)
    assert net.labels == SHAPE_LABELS
    for kind in SHAPE_LABELS:
        labels = infer(net, fixture_image(kind))
        assert labels[0].name == kind
        assert labels[0].score > 0.6


@pytest.mark.slow
def test_fixture_network_accuracy_and_speed():
    net = fixture_network()
    assert evaluate_accuracy(net) >= 0.95
    image = fixture_image("cross")
    start = time.perf_counter()
    infer(net, image)
    assert time.perf_counter() - start < 0.1
