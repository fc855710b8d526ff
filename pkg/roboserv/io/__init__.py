"""I/O module"""

from .sensor_dump import dump_audio_wav, dump_ground_truth_csv, dump_imu_csv
from .trace_writer import read_trace_csv, write_ntuple, write_trace_csv

__all__ = [
    'dump_audio_wav', 'dump_ground_truth_csv', 'dump_imu_csv',
    'read_trace_csv', 'write_ntuple', 'write_trace_csv',
]
