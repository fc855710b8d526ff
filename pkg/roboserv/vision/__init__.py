"""CNN inference engine and fixture shape classifier"""

from .fixture import build_fixture_network, fixture_network
from .layers import (
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
)
from .network import Label, Network, infer
from .network_io import NetworkFormatError, load_network, save_network
from .shapes import SHAPE_LABELS, fixture_image

__all__ = [
    'build_fixture_network', 'fixture_network',
    'Activation', 'Conv', 'FullyConnected', 'Pool', 'ShapeError', 'Softmax',
    'apply_activation', 'conv_forward', 'fc_forward', 'pool_forward',
    'Label', 'Network', 'infer',
    'NetworkFormatError', 'load_network', 'save_network',
    'SHAPE_LABELS', 'fixture_image',
]
