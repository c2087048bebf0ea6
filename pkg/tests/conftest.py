"""Shared fixtures: synthetic datasets, trained weights, quantized networks.

Dataset generation and network quantization are session-scoped because
several modules reuse them and the digit test split is large (10k images,
the size the accuracy-band check needs).
"""

import importlib.util
import pathlib

import pytest

from imacsim.datasets import load_dataset
from imacsim.inference import build_quantized
from imacsim.netspec import lenet5, vgg_cifar10
from imacsim.quantize import QuantScheme
from imacsim.synth import write_color_files, write_digit_files
from imacsim.tensorfile import load_tensors

REPO = pathlib.Path(__file__).resolve().parents[1]

N_TEST_DIGITS = 10_000
N_TEST_COLORS = 500


@pytest.fixture(scope="session")
def digits_dir(tmp_path_factory) -> str:
    d = tmp_path_factory.mktemp("digits")
    write_digit_files(str(d), n_train=64, n_test=N_TEST_DIGITS, seed=0)
    return str(d)


@pytest.fixture(scope="session")
def digits_test(digits_dir):
    return load_dataset("idx", digits_dir, "test")


@pytest.fixture(scope="session")
def cifar_dir(tmp_path_factory) -> str:
    d = tmp_path_factory.mktemp("colors")
    write_color_files(str(d), n_test=N_TEST_COLORS, seed=0)
    return str(d)


@pytest.fixture(scope="session")
def cifar_test(cifar_dir):
    return load_dataset("cifar10", cifar_dir, "test")


@pytest.fixture(scope="session")
def lenet_weights_path() -> str:
    return str(REPO / "fixtures" / "lenet_weights.nt")


@pytest.fixture(scope="session")
def lenet_weights(lenet_weights_path):
    return load_tensors(lenet_weights_path)


@pytest.fixture(scope="session")
def lenet_qnet(lenet_weights, digits_test):
    net = lenet5()
    scheme = QuantScheme(weight_bits=5, activation_bits=5)
    return build_quantized(net, lenet_weights, scheme, digits_test.images[:256])


@pytest.fixture(scope="session")
def vgg_weights():
    # Random (untrained) tensors are enough for the structural smoke
    # checks; ~140 MB, so generated lazily and only once.
    path = REPO / "fixtures" / "gen_vgg_weights.py"
    spec = importlib.util.spec_from_file_location("gen_vgg_weights", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod.vgg_random_weights(seed=0)


@pytest.fixture(scope="session")
def vgg_qnet(vgg_weights, cifar_test):
    net = vgg_cifar10()
    scheme = QuantScheme(weight_bits=5, activation_bits=5)
    return build_quantized(net, vgg_weights, scheme, cifar_test.images[:32])
