"""HMM structures and the composite command-word graph"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from .gmm import GmmModel

NEG_INF = -np.inf
STATES_PER_SEGMENT = 3
SILENCE_SELF_LOOP = 0.9
WORD_SELF_LOOP = 0.8
INITIAL_SILENCE_MASS = 0.5


@dataclass(eq=False)
class HmmModel:
    """States bound to GMMs with log transition and initial tables"""
    gmms: List[GmmModel]
    log_transitions: np.ndarray  # (N, N)
    log_initial: np.ndarray  # (N,)
    state_labels: List[str] = field(default_factory=list)

    def __post_init__(self):
        """Check that every row is a log distribution"""
        self.log_transitions = np.asarray(self.log_transitions, dtype=np.float64)
        self.log_initial = np.asarray(self.log_initial, dtype=np.float64)
        n = len(self.gmms)
        if self.log_transitions.shape != (n, n) or self.log_initial.shape != (n,):
            raise ValueError(f"HMM with {n} states needs ({n}, {n}) transitions and ({n},) initial, got "
                             f"{self.log_transitions.shape} / {self.log_initial.shape}")
        for i, row in enumerate(self.log_transitions):
            if np.any(np.isfinite(row)) and abs(logsumexp(row)) > 1e-9:
                raise ValueError(f"transition row {i} does not sum to 1")
        if not np.any(np.isfinite(self.log_initial)) or abs(logsumexp(self.log_initial)) > 1e-9:
            raise ValueError("initial distribution must sum to 1 with at least one allowed state")
        if not self.state_labels:
            self.state_labels = [f"s{i}" for i in range(n)]
        if len(self.state_labels) != n:
            raise ValueError(f"expected {n} state labels, got {len(self.state_labels)}")

    @property
    def num_states(self) -> int:
        return len(self.gmms)


@dataclass
class Lexicon:
    """Word -> left-to-right state ids, plus the shared silence state"""
    words: Dict[str, List[int]]
    silence_state: int = 0

    def __post_init__(self):
        seen = {self.silence_state}
        for word, states in self.words.items():
            if not states:
                raise ValueError(f"word {word!r} has no states")
            if seen.intersection(states):
                raise ValueError(f"word {word!r} reuses state ids {sorted(seen.intersection(states))}")
            seen.update(states)

    def word_of_state(self) -> Dict[int, Tuple[str, int]]:
        """state id -> (word, position in the word)"""
        return {s: (w, i) for w, states in self.words.items() for i, s in enumerate(states)}


@dataclass(eq=False)
class SpeechModel:
    """Everything recognize() needs: per-segment GMMs wired into one graph"""
    vocabulary: Dict[str, Tuple[float, ...]]
    silence_gmm: GmmModel
    segment_gmms: Dict[str, List[GmmModel]]  # word -> one GMM per tone segment
    lexicon: Optional[Lexicon] = None
    hmm: Optional[HmmModel] = None

    def __post_init__(self):
        if self.lexicon is None or self.hmm is None:
            self.lexicon, self.hmm = build_composite_hmm(self.vocabulary, self.silence_gmm, self.segment_gmms)


def _log(p: float) -> float:
    return math.log(p) if p > 0 else NEG_INF


def build_composite_hmm(vocabulary: Dict[str, Sequence[float]], silence_gmm: GmmModel,
                        segment_gmms: Dict[str, List[GmmModel]]) -> Tuple[Lexicon, HmmModel]:
    """
    Silence loop plus one left-to-right chain per word

    Silence exits uniformly into the first state of every word; each word's
    last state returns only to silence. Word states carry their segment GMM.
    """
    words = sorted(vocabulary)
    gmms = [silence_gmm]
    labels = ["<sil>"]
    lexicon_words: Dict[str, List[int]] = {}
    for word in words:
        if len(segment_gmms[word]) != len(vocabulary[word]):
            raise ValueError(f"word {word!r} needs one GMM per tone segment")
        ids = []
        for seg, gmm in enumerate(segment_gmms[word]):
            for k in range(STATES_PER_SEGMENT):
                ids.append(len(gmms))
                gmms.append(gmm)
                labels.append(f"{word}/{seg}/{k}")
        lexicon_words[word] = ids
    n = len(gmms)
    trans = np.full((n, n), NEG_INF)
    trans[0, 0] = _log(SILENCE_SELF_LOOP)
    for word in words:
        ids = lexicon_words[word]
        trans[0, ids[0]] = _log((1.0 - SILENCE_SELF_LOOP) / len(words))
        for a, b in zip(ids, ids[1:]):
            trans[a, a] = _log(WORD_SELF_LOOP)
            trans[a, b] = _log(1.0 - WORD_SELF_LOOP)
        trans[ids[-1], ids[-1]] = _log(WORD_SELF_LOOP)
        trans[ids[-1], 0] = _log(1.0 - WORD_SELF_LOOP)
    initial = np.full(n, NEG_INF)
    initial[0] = _log(INITIAL_SILENCE_MASS)
    for word in words:
        initial[lexicon_words[word][0]] = _log((1.0 - INITIAL_SILENCE_MASS) / len(words))
    lexicon = Lexicon(lexicon_words, 0)
    return lexicon, HmmModel(gmms, trans, initial, labels)
