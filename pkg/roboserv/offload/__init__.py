"""Cloud offloading: endpoints, placement policy, wire protocol, client and server"""

from .client import OffloadResult, OffloadTransportError, offload_call
from .endpoints import Endpoint, EndpointKind, LatencyModel, ToleranceTable, lan_fixture, wan_fixture
from .placement import Placement, PlacementPlan, decide_placement
from .policy import PolicyEstimate, all_local_estimate, estimate_policy
from .protocol import (
    AsrRequest,
    AsrResponse,
    ErrorMessage,
    FramingError,
    MsgType,
    ObjectRequest,
    ObjectResponse,
    ProtocolError,
    decode_message,
    encode_message,
)
from .server import OffloadServer, ServiceModels, load_service_models, serve_offload

__all__ = [
    'OffloadResult', 'OffloadTransportError', 'offload_call',
    'Endpoint', 'EndpointKind', 'LatencyModel', 'ToleranceTable', 'lan_fixture', 'wan_fixture',
    'Placement', 'PlacementPlan', 'decide_placement',
    'PolicyEstimate', 'all_local_estimate', 'estimate_policy',
    'AsrRequest', 'AsrResponse', 'ErrorMessage', 'FramingError', 'MsgType', 'ObjectRequest',
    'ObjectResponse', 'ProtocolError', 'decode_message', 'encode_message',
    'OffloadServer', 'ServiceModels', 'load_service_models', 'serve_offload',
]
