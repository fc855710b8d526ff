"""Predefined robot command interface"""

from enum import Enum
from typing import Iterable, Optional, Union

from .decoder import Transcript


class Command(Enum):
    STOP = "stop"
    GO = "go"
    LEFT = "left"
    RIGHT = "right"


DEFAULT_COMMANDS = frozenset(Command)


def match_command(transcript: Union[Transcript, Iterable[str]],
                  commands: Optional[Iterable[Union[Command, str]]] = None) -> Optional[Command]:
    """First transcript word present in the command set (exact match), else None"""
    allowed = {Command(c) if isinstance(c, str) else c
               for c in (DEFAULT_COMMANDS if commands is None else commands)}
    by_word = {c.value: c for c in allowed}
    words = transcript.word_list if isinstance(transcript, Transcript) else list(transcript)
    for word in words:
        if word in by_word:
            return by_word[word]
    return None
