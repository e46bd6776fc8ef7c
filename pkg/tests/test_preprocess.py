import unicodedata

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bangladep.preprocess import (
    CleaningConfig,
    clean,
    is_punctuation,
    normalize_whitespace,
    remove_emojis,
    remove_non_bangla_words,
    remove_punctuation,
    tokenize,
)

WORKED_INPUT = "শুভ সকাল পবিত্র জুম্মার দিন জুম্মা মোবারক ! ۞ সুন্দর হোক সবার জীবন #Jumma"
WORKED_OUTPUT = "শুভ সকাল পবিত্র জুম্মার দিন জুম্মা মোবারক সুন্দর হোক সবার জীবন"

# Bangla letters, Latin, digits, emoji, punctuation, symbols and whitespace.
_ALPHABET = st.sampled_from(
    list("কখগঘআইউএওািীুে্ংঃ০১২৯") + list("abzAZ019") + ["\U0001F600", "❤", "\ufe0f", "\u200d",
                                                       "\U0001F44D", "۞", "©", "।", "!", "#", ",", "…",
                                                       "\u2014", " ", "\t", "\n", " "]
)
texts = st.text(alphabet=_ALPHABET, max_size=60)


def _configs():
    return st.tuples(st.booleans(), st.booleans(), st.booleans(), st.booleans()).filter(any).map(
        lambda flags: CleaningConfig(*flags))


def test_worked_example():
    out = clean(unicodedata.normalize("NFC", WORKED_INPUT))
    assert out.encode() == unicodedata.normalize("NFC", WORKED_OUTPUT).encode()


def test_single_emoji():
    assert remove_emojis("ভালো 😀") == "ভালো "


def test_ornament_removed_by_emoji_step():
    assert remove_emojis("۞") == ""


def test_emoji_zwj_sequence_and_selectors():
    family = "\U0001F468\u200d\U0001F469\u200d\U0001F467"
    assert remove_emojis(f"ক{family}খ \u2764\ufe0f") == "কখ "


def test_zwj_inside_bangla_is_kept():
    # ZWJ has a shaping role between Bangla letters
    text = "র\u200d্য"
    assert remove_emojis(text) == text


@pytest.mark.parametrize("fn,text", [
    (remove_emojis, "আমি ভালো আছি"),
    (remove_non_bangla_words, "আমি ভালো আছি"),
    (remove_punctuation, "আমি ভালো আছি"),
    (normalize_whitespace, "আমি ভালো আছি"),
])
def test_steps_are_identity_without_their_feature(fn, text):
    assert fn(text) == text


def test_english_words_removed():
    assert normalize_whitespace(remove_non_bangla_words("আমি sad আছি")) == "আমি আছি"
    assert remove_non_bangla_words("#Jumma").strip() == ""
    assert remove_non_bangla_words("ক২খ") == "ক২খ"


def test_bare_digits_removed():
    assert normalize_whitespace(remove_non_bangla_words("আমি ২০২৩ ১২, 55")) == "আমি ,"
    assert remove_non_bangla_words("২০০৯সালের") == "২০০৯সালের"


def test_punctuation():
    assert remove_punctuation("ভালো!") == "ভালো "
    assert remove_punctuation("……") == "  "
    assert remove_punctuation("এক।দুই") == "এক দুই"
    assert is_punctuation("۞") and is_punctuation("«") and not is_punctuation("ক")


def test_whitespace():
    assert normalize_whitespace("  ক   খ ") == "ক খ"
    assert normalize_whitespace("\t\nক") == "ক"
    assert normalize_whitespace("ক খ") == "ক খ"


def test_empty_and_tokenize():
    assert clean("") == ""
    assert tokenize("ক খ গ") == ["ক", "খ", "গ"]
    assert tokenize("") == []


def test_config_needs_a_step():
    with pytest.raises(ValueError):
        CleaningConfig(False, False, False, False)
    c = CleaningConfig(remove_punctuation=False)
    assert CleaningConfig.from_dict(c.to_dict()) == c


@settings(max_examples=300, deadline=None)
@given(texts, _configs())
def test_clean_is_idempotent(text, config):
    once = clean(text, config)
    assert clean(once, config) == once


@settings(max_examples=300, deadline=None)
@given(texts)
def test_clean_output_alphabet(text):
    out = clean(text)
    assert set(out) <= set(text) | {" "}
    assert "  " not in out and out == out.strip()
    for ch in out:
        assert not ("A" <= ch <= "Z" or "a" <= ch <= "z")
        assert ch == " " or not is_punctuation(ch)
        assert unicodedata.category(ch) != "So"
        assert not "\ufe00" <= ch <= "\ufe0f"


@settings(max_examples=200, deadline=None)
@given(texts)
def test_tokenize_round_trip(text):
    cleaned = clean(text)
    assert " ".join(tokenize(cleaned)) == cleaned
    assert all(tokenize(cleaned))
