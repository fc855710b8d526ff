"""Speech model file format (JSON)

    {
      "format": "roboserv-gmm-hmm",
      "version": 1,
      "vocabulary": {word: [tone Hz, ...]},
      "gmms": {"<sil>": GMM, "stop/0": GMM, ...},
      "lexicon": {"silence_state": 0, "words": {word: [state ids]}},
      "states": [{"label": ..., "gmm": key into gmms}],
      "log_initial": [...],
      "log_transitions": [[...], ...]
    }

GMM = {"weights": [...], "means": [[...]], "variances": [[...]]}.
Log probabilities of -inf are stored as null.
"""

import json
from pathlib import Path
from typing import List, Union

import numpy as np

from .gmm import GmmModel
from .hmm import HmmModel, Lexicon, SpeechModel
from .vocabulary import SILENCE

FORMAT_TAG = "roboserv-gmm-hmm"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


def _log_list(values: np.ndarray):
    if values.ndim > 1:
        return [_log_list(row) for row in values]
    return [None if v == -np.inf else float(v) for v in values]


def _from_log_list(values) -> np.ndarray:
    if values and isinstance(values[0], list):
        return np.array([_from_log_list(row) for row in values])
    return np.array([-np.inf if v is None else float(v) for v in values], dtype=np.float64)


def _gmm_doc(gmm: GmmModel) -> dict:
    return {"weights": gmm.weights.tolist(), "means": gmm.means.tolist(), "variances": gmm.variances.tolist()}


def _gmm_key(word: str, segment: int) -> str:
    return f"{word}/{segment}"


def dumps_speech_model(model: SpeechModel) -> bytes:
    gmms = {SILENCE: _gmm_doc(model.silence_gmm)}
    key_of = {id(model.silence_gmm): SILENCE}
    for word, segment_gmms in model.segment_gmms.items():
        for j, gmm in enumerate(segment_gmms):
            gmms[_gmm_key(word, j)] = _gmm_doc(gmm)
            key_of[id(gmm)] = _gmm_key(word, j)
    doc = {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "vocabulary": {w: list(tones) for w, tones in model.vocabulary.items()},
        "gmms": gmms,
        "lexicon": {"silence_state": model.lexicon.silence_state, "words": model.lexicon.words},
        "states": [{"label": label, "gmm": key_of[id(gmm)]}
                   for label, gmm in zip(model.hmm.state_labels, model.hmm.gmms)],
        "log_initial": _log_list(model.hmm.log_initial),
        "log_transitions": _log_list(model.hmm.log_transitions),
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def loads_speech_model(data: bytes) -> SpeechModel:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"speech model is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_TAG:
        raise ModelFormatError(f"unexpected format tag {doc.get('format') if isinstance(doc, dict) else None!r}")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported version {doc.get('version')!r}")
    try:
        gmms = {key: GmmModel(g["weights"], g["means"], g["variances"]) for key, g in doc["gmms"].items()}
        vocabulary = {w: tuple(float(f) for f in tones) for w, tones in doc["vocabulary"].items()}
        segment_gmms = {w: [gmms[_gmm_key(w, j)] for j in range(len(tones))] for w, tones in vocabulary.items()}
        states: List[dict] = doc["states"]
        hmm = HmmModel([gmms[s["gmm"]] for s in states],
                       _from_log_list(doc["log_transitions"]),
                       _from_log_list(doc["log_initial"]),
                       [s["label"] for s in states])
        lexicon = Lexicon({w: [int(s) for s in ids] for w, ids in doc["lexicon"]["words"].items()},
                          int(doc["lexicon"]["silence_state"]))
        silence_gmm = gmms[SILENCE]
    except KeyError as exc:
        raise ModelFormatError(f"missing field {exc}") from None
    for word, ids in lexicon.words.items():
        if max(ids) >= hmm.num_states:
            raise ModelFormatError(f"word {word!r} refers to state {max(ids)} of {hmm.num_states}")
    return SpeechModel(vocabulary, silence_gmm, segment_gmms, lexicon, hmm)


def save_speech_model(model: SpeechModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_bytes(dumps_speech_model(model))
    return path


def load_speech_model(path: Union[str, Path]) -> SpeechModel:
    return loads_speech_model(Path(path).read_bytes())
