"""Virtual-time runtime: lanes, stage chains, deadlines, power and the decision units"""

from .deadlines import DeadlineSpec, DeadlineViolation, check_deadlines, item_latencies, latency_percentiles
from .lanes import Lane, LaneConfig, make_lanes
from .records import SERVICE_ORDER, TRACE_COLUMNS, DropPolicy, LaneKind, ServiceId, StageSpec, TaskRecord
from .report import RunReport, StreamStats
from .resources import (
    DEFAULT_BATTERY_WH,
    Contention,
    ProfileTable,
    ResourceProfile,
    battery_life_hours,
    combined_utilization,
    power_draw,
)
from .units import (
    ChassisCommand,
    ChassisLink,
    Endpointer,
    EndpointerParams,
    NavigationConfig,
    NavigationParams,
    Navigator,
    ReactionRule,
    navigation_step,
    react_to_labels,
)
# scheduler pulls in offload, which needs the modules above
from .scheduler import (
    SceneObject,
    SensorConfig,
    ServiceConfig,
    Utterance,
    default_services,
    run_scenario,
    simulate_chain,
    slam_cost_table,
)

__all__ = [
    'DeadlineSpec', 'DeadlineViolation', 'check_deadlines', 'item_latencies', 'latency_percentiles',
    'Lane', 'LaneConfig', 'make_lanes',
    'SERVICE_ORDER', 'TRACE_COLUMNS', 'DropPolicy', 'LaneKind', 'ServiceId', 'StageSpec', 'TaskRecord',
    'RunReport', 'StreamStats',
    'DEFAULT_BATTERY_WH', 'Contention', 'ProfileTable', 'ResourceProfile',
    'battery_life_hours', 'combined_utilization', 'power_draw',
    'SceneObject', 'SensorConfig', 'ServiceConfig', 'Utterance',
    'default_services', 'run_scenario', 'simulate_chain', 'slam_cost_table',
    'ChassisCommand', 'ChassisLink', 'Endpointer', 'EndpointerParams', 'NavigationConfig',
    'NavigationParams', 'Navigator', 'ReactionRule', 'navigation_step', 'react_to_labels',
]
