"""Viterbi decoding and word recognition"""

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import List, Tuple

import numpy as np

from .features import extract_speech_features
from .gmm import gmm_log_likelihoods
from .hmm import HmmModel, SpeechModel

logger = logging.getLogger(__name__)


class DecodeError(ValueError):
    """No state sequence has finite probability"""


def emission_matrix(hmm: HmmModel, observations: np.ndarray) -> np.ndarray:
    """Log emission of every frame under every state, shape (T, N)"""
    obs = np.atleast_2d(np.asarray(observations, dtype=np.float64))
    cache = {}
    columns = []
    for gmm in hmm.gmms:
        key = id(gmm)
        if key not in cache:
            cache[key] = gmm_log_likelihoods(gmm, obs)
        columns.append(cache[key])
    return np.stack(columns, axis=1)


def viterbi(log_initial: np.ndarray, log_transitions: np.ndarray,
            log_emissions: np.ndarray) -> Tuple[List[int], float]:
    """
    Most likely state path for precomputed emissions

    delta_0 = init + b_0; delta_t(j) = max_i(delta_{t-1}(i) + A_ij) + b_t(j).
    Ties go to the lowest state id, both for the final state and at every
    backtrack step.
    """
    t_len, n = log_emissions.shape
    if t_len == 0:
        raise DecodeError("cannot decode an empty observation sequence")
    backpointers = np.zeros((t_len, n), dtype=np.int64)
    delta = log_initial + log_emissions[0]
    for t in range(1, t_len):
        scores = delta[:, None] + log_transitions
        backpointers[t] = np.argmax(scores, axis=0)
        delta = scores[backpointers[t], np.arange(n)] + log_emissions[t]
    last = int(np.argmax(delta))
    best = float(delta[last])
    if best == -np.inf:
        raise DecodeError("every state path has zero probability")
    path = [last]
    for t in range(t_len - 1, 0, -1):
        path.append(int(backpointers[t, path[-1]]))
    path.reverse()
    return path, best


def viterbi_decode(hmm: HmmModel, observations: np.ndarray) -> Tuple[List[int], float]:
    """Decode feature frames against an HMM; returns (state path, total log score)"""
    return viterbi(hmm.log_initial, hmm.log_transitions, emission_matrix(hmm, observations))


@dataclass(frozen=True)
class WordSpan:
    word: str
    start_frame: int
    end_frame: int  # inclusive
    log_score: float


@dataclass
class Transcript:
    words: List[WordSpan] = field(default_factory=list)

    @property
    def text(self) -> str:
        return " ".join(w.word for w in self.words)

    @property
    def word_list(self) -> List[str]:
        return [w.word for w in self.words]

    def to_json(self) -> str:
        return json.dumps({"words": [asdict(w) for w in self.words]}, indent=2, sort_keys=True)


def _path_contributions(hmm: HmmModel, path: List[int], emissions: np.ndarray) -> np.ndarray:
    steps = [hmm.log_initial[path[0]] + emissions[0, path[0]]]
    for t in range(1, len(path)):
        steps.append(hmm.log_transitions[path[t - 1], path[t]] + emissions[t, path[t]])
    return np.array(steps)


def segment_words(model: SpeechModel, path: List[int], contributions: np.ndarray) -> Transcript:
    """Cut a state path into words; words whose final state is never reached are dropped"""
    owner = model.lexicon.word_of_state()
    spans = []
    current = None  # (word, start, highest position reached)
    for t, state in enumerate(path + [model.lexicon.silence_state]):
        info = owner.get(state)
        if current is not None and (info is None or info[0] != current[0] or info[1] < current[2]):
            word, start, reached = current
            if reached == len(model.lexicon.words[word]) - 1:
                spans.append(WordSpan(word, start, t - 1, float(contributions[start:t].sum())))
            current = None
        if info is not None:
            if current is None:
                current = (info[0], t, info[1])
            else:
                current = (current[0], current[1], max(current[2], info[1]))
    return Transcript(spans)


def recognize(model: SpeechModel, audio) -> Transcript:
    """
    Recognize command words in an audio stream

    Args:
        model: trained speech model
        audio: AudioChunk stream or raw 8 kHz samples

    Returns:
        Transcript (empty for audio shorter than one frame)
    """
    features = extract_speech_features(audio)
    if len(features) == 0:
        return Transcript()
    emissions = emission_matrix(model.hmm, features)
    path, score = viterbi(model.hmm.log_initial, model.hmm.log_transitions, emissions)
    transcript = segment_words(model, path, _path_contributions(model.hmm, path, emissions))
    logger.debug("decoded %d frames score=%.2f -> %r", len(features), score, transcript.text)
    return transcript
