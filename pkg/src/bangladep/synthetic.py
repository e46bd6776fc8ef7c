"""Seeded generator for the bundled 200-post bilingual-noise fixture.

Depressive and non-depressive posts draw from separate Bangla word pools
plus a shared pool, so small models can separate them. Each post is then
salted with English words, emoji, digits and punctuation that cleaning must
strip. Non-depressive posts run longer, mimicking the real corpus.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .corpus import Label

FIXTURE_SEED = 2023
FIXTURE_SIZE = 200
FIXTURE_DEPRESSIVE = 50

DEPRESSIVE_WORDS = (
    "কষ্ট", "একা", "হতাশ", "মরে", "যন্ত্রণা", "কান্না", "অন্ধকার", "ক্লান্ত", "ব্যর্থ", "শূন্য",
    "নিঃসঙ্গ", "ভয়", "দুঃখ", "ঘুম", "বিষণ্ণ", "অসহায়", "ভেঙে", "মন", "খারাপ", "শেষ",
)
NON_DEPRESSIVE_WORDS = (
    "আনন্দ", "খেলা", "বন্ধু", "উৎসব", "ভালো", "সুন্দর", "গান", "হাসি", "জয়", "সকাল",
    "রান্না", "ভ্রমণ", "বই", "পরিবার", "খুশি", "নতুন", "ছবি", "মজা", "শুভ", "আলো",
)
SHARED_WORDS = ("আমি", "আজ", "আমার", "সবাই", "এখন", "কেন", "সাথে", "অনেক", "দিন", "জীবন")
ENGLISH_NOISE = ("life", "sad", "happy", "OMG", "lol", "Dhaka", "feeling", "bro", "today", "game")
EMOJI_NOISE = ("\U0001F622", "\U0001F60A", "❤️", "\U0001F44D", "\U0001F494", "۞", "\U0001F389")
PUNCT_NOISE = ("।", "!", "?", ",", "...", "#", "\"", "(", ")")
DIGIT_NOISE = ("২০২৩", "12", "৫", "100")


def _post(rng: np.random.Generator, label: Label) -> str:
    own = DEPRESSIVE_WORDS if label is Label.DEPRESSIVE else NON_DEPRESSIVE_WORDS
    n_words = int(rng.integers(4, 9)) if label is Label.DEPRESSIVE else int(rng.integers(8, 16))
    words = []
    for _ in range(n_words):
        pool = own if rng.random() < 0.7 else SHARED_WORDS
        words.append(pool[int(rng.integers(len(pool)))])
    for pool, p in ((ENGLISH_NOISE, 0.5), (EMOJI_NOISE, 0.6), (DIGIT_NOISE, 0.2)):
        if rng.random() < p:
            words.insert(int(rng.integers(len(words) + 1)), pool[int(rng.integers(len(pool)))])
    text = " ".join(words)
    if rng.random() < 0.8:
        text += PUNCT_NOISE[int(rng.integers(len(PUNCT_NOISE)))]
    return text


def generate_posts(n: int = FIXTURE_SIZE, n_depressive: int = FIXTURE_DEPRESSIVE,
                   seed: int = FIXTURE_SEED) -> list[tuple[str, Label]]:
    if not 0 <= n_depressive <= n:
        raise ValueError("n_depressive must lie in [0, n]")
    rng = np.random.default_rng(seed)
    labels = [Label.DEPRESSIVE] * n_depressive + [Label.NON_DEPRESSIVE] * (n - n_depressive)
    labels = [labels[i] for i in rng.permutation(n)]
    return [(_post(rng, label), label) for label in labels]


def fixture_csv(posts: list[tuple[str, Label]] | None = None) -> str:
    posts = generate_posts() if posts is None else posts
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["text", "label"])
    for text, label in posts:
        writer.writerow([text, label.value])
    return buf.getvalue()


def fixture_path() -> Path:
    return Path(__file__).parent / "data" / "synthetic_posts.csv"


def write_fixture(path: str | Path | None = None) -> Path:
    path = Path(path) if path else fixture_path()
    path.write_text(fixture_csv(), encoding="utf-8")
    return path
