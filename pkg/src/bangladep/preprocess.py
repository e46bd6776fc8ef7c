"""Text cleaning for Bangla social-media posts.

Four steps, always applied in this order when enabled: drop emoji and
pictographic symbols, drop whitespace tokens that carry Latin letters,
turn punctuation into spaces, collapse whitespace.
"""
from __future__ import annotations

import re
import string
import unicodedata
from dataclasses import asdict, dataclass
from functools import lru_cache

# Emoticons, Misc Symbols & Pictographs, Transport & Map, Supplemental Symbols &
# Pictographs, Symbols & Pictographs Extended-A, Misc Symbols, Dingbats, plus
# the pieces emoji sequences are built from (regional indicators, keycap, tags).
_EMOJI_RANGES = (
    ("\U0001F600", "\U0001F64F"),
    ("\U0001F300", "\U0001F5FF"),
    ("\U0001F680", "\U0001F6FF"),
    ("\U0001F900", "\U0001F9FF"),
    ("\U0001FA70", "\U0001FAFF"),
    ("\u2600", "\u26FF"),
    ("\u2700", "\u27BF"),
    ("\U0001F1E6", "\U0001F1FF"),
    ("\u20E3", "\u20E3"),
    ("\U000E0020", "\U000E007F"),
)
_EMOJI_CLASS = "".join(f"{lo}-{hi}" if lo != hi else lo for lo, hi in _EMOJI_RANGES)
_VARIATION = "\uFE00-\uFE0F"
_ZWJ = "\u200D"
# A ZWJ only goes when it glues emoji together; Bangla conjuncts keep theirs.
_EMOJI_SEQ_RE = re.compile(
    f"{_ZWJ}?[{_EMOJI_CLASS}][{_VARIATION}]*(?:{_ZWJ}[{_EMOJI_CLASS}][{_VARIATION}]*)*{_ZWJ}?"
)
_VARIATION_RE = re.compile(f"[{_VARIATION}]")

_LATIN_RE = re.compile(r"[A-Za-z]")
_TOKEN_RE = re.compile(r"\S+")
_ASCII_PUNCT = frozenset(string.punctuation)


@dataclass(frozen=True)
class CleaningConfig:
    remove_emojis: bool = True
    remove_non_bangla: bool = True
    remove_punctuation: bool = True
    normalize_whitespace: bool = True

    def __post_init__(self):
        if not any(asdict(self).values()):
            raise ValueError("CleaningConfig must enable at least one step")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "CleaningConfig":
        return cls(**{k: bool(v) for k, v in data.items()})


@lru_cache(maxsize=None)
def is_punctuation(ch: str) -> bool:
    """Unicode punctuation (P*), ASCII punctuation and non-emoji symbols (So)."""
    if ch in _ASCII_PUNCT:
        return True
    cat = unicodedata.category(ch)
    return cat.startswith("P") or cat == "So"


def remove_emojis(text: str) -> str:
    """Delete emoji sequences and other pictographic symbols (category So)."""
    text = _EMOJI_SEQ_RE.sub("", text)
    text = _VARIATION_RE.sub("", text)
    return "".join(ch for ch in text if unicodedata.category(ch) != "So")


def _is_digit_run_boundary(text: str, i: int) -> bool:
    return i < 0 or i >= len(text) or text[i].isspace() or is_punctuation(text[i])


def _drop_bare_digits(token: str) -> str:
    # A digit run goes when nothing but whitespace or punctuation touches it,
    # so "২০০৯সালের" stays while "২০০৯" and "১২," lose their digits.
    out = []
    i = 0
    n = len(token)
    while i < n:
        if token[i].isdecimal():
            j = i
            while j < n and token[j].isdecimal():
                j += 1
            if not (_is_digit_run_boundary(token, i - 1) and _is_digit_run_boundary(token, j)):
                out.append(token[i:j])
            i = j
        else:
            out.append(token[i])
            i += 1
    return "".join(out)


def _filter_token(match: re.Match) -> str:
    token = match.group()
    if _LATIN_RE.search(token):
        return ""
    return _drop_bare_digits(token)


def remove_non_bangla_words(text: str) -> str:
    """Delete whitespace tokens containing a Basic-Latin letter, and bare digit runs."""
    return _TOKEN_RE.sub(_filter_token, text)


def remove_punctuation(text: str) -> str:
    return "".join(" " if is_punctuation(ch) else ch for ch in text)


def normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


def clean(text: str, config: CleaningConfig | None = None) -> str:
    config = config or CleaningConfig()
    if config.remove_emojis:
        text = remove_emojis(text)
    if config.remove_non_bangla:
        text = remove_non_bangla_words(text)
    if config.remove_punctuation:
        text = remove_punctuation(text)
    if config.normalize_whitespace:
        text = normalize_whitespace(text)
    return text


def tokenize(text: str) -> list[str]:
    """Split cleaned text on single spaces, dropping empty pieces."""
    return [tok for tok in text.split(" ") if tok]
