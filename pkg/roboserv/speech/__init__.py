"""GMM-HMM command-word recognizer"""

from .commands import DEFAULT_COMMANDS, Command, match_command
from .decoder import DecodeError, Transcript, WordSpan, recognize, viterbi, viterbi_decode
from .features import extract_speech_features
from .gmm import GmmModel, gmm_log_likelihood
from .hmm import HmmModel, Lexicon, SpeechModel, build_composite_hmm
from .model_io import ModelFormatError, load_speech_model, save_speech_model
from .training import fixture_speech_model, train_speech_model
from .vocabulary import SAMPLE_RATE, VOCABULARY

__all__ = [
    'DEFAULT_COMMANDS', 'Command', 'match_command',
    'DecodeError', 'Transcript', 'WordSpan', 'recognize', 'viterbi', 'viterbi_decode',
    'extract_speech_features',
    'GmmModel', 'gmm_log_likelihood',
    'HmmModel', 'Lexicon', 'SpeechModel', 'build_composite_hmm',
    'ModelFormatError', 'load_speech_model', 'save_speech_model',
    'fixture_speech_model', 'train_speech_model',
    'SAMPLE_RATE', 'VOCABULARY',
]
