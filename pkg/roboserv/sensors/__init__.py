"""Ground truth and synthetic sensor streams"""

from .audio import AudioChunk, compose_audio_track, synthesize_audio
from .camera import CameraIntrinsics, StereoRig
from .imu import ImuErrorModel, ImuSample, sample_imu
from .prng import Xorshift64Star, derive_seed
from .stereo import StereoFrame, StereoFrameSequence, render_stereo_frames, visible_fiducials
from .trajectory import GroundTruth, TrajectorySpec, generate_trajectory

__all__ = [
    'AudioChunk', 'compose_audio_track', 'synthesize_audio',
    'CameraIntrinsics', 'StereoRig',
    'ImuErrorModel', 'ImuSample', 'sample_imu',
    'Xorshift64Star', 'derive_seed',
    'StereoFrame', 'StereoFrameSequence', 'render_stereo_frames', 'visible_fiducials',
    'GroundTruth', 'TrajectorySpec', 'generate_trajectory',
]
