from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bangladep.corpus import (
    Corpus,
    CorpusError,
    DatasetSplits,
    Label,
    LengthUnit,
    class_distribution,
    length_distribution,
    load_corpus,
    mean_length,
    oversample_minority,
    split_corpus,
    top_words,
)
from bangladep.preprocess import clean, tokenize

from conftest import count_matched_corpus


def _write(tmp_path, body, name="d.csv"):
    path = tmp_path / name
    path.write_text(body, encoding="utf-8")
    return path


def test_load_csv_and_labels(tmp_path):
    path = _write(tmp_path, "text,label\nআমি ভালো,Non_depressive\nকষ্ট,DEPRESSIVE\n\"এক, দুই\",depressive\n")
    c = load_corpus(path)
    assert len(c) == 3
    assert [p.label for p in c] == [Label.NON_DEPRESSIVE, Label.DEPRESSIVE, Label.DEPRESSIVE]
    assert c.posts[2].text == "এক, দুই"
    assert len(set(c.ids)) == 3


def test_load_tsv_with_bom(tmp_path):
    path = tmp_path / "d.tsv"
    path.write_bytes("﻿text\tlabel\nক\tdepressive\n".encode())
    assert len(load_corpus(path)) == 1


def test_load_errors(tmp_path):
    with pytest.raises(CorpusError, match="not found"):
        load_corpus(tmp_path / "missing.csv")
    with pytest.raises(CorpusError, match="no data rows"):
        load_corpus(_write(tmp_path, "text,label\n"))
    with pytest.raises(CorpusError, match="row 3"):
        load_corpus(_write(tmp_path, "text,label\nক,depressive\nখ,happy\n"))
    with pytest.raises(CorpusError, match="row 2: empty"):
        load_corpus(_write(tmp_path, "text,label\n  ,depressive\n"))
    with pytest.raises(CorpusError, match="missing column"):
        load_corpus(_write(tmp_path, "body,label\nক,depressive\n"))


def test_class_distribution():
    assert class_distribution(Corpus(())) == {Label.NON_DEPRESSIVE: 0, Label.DEPRESSIVE: 0}
    c = Corpus.from_records([("ক", Label.DEPRESSIVE)] * 3)
    assert class_distribution(c) == {Label.NON_DEPRESSIVE: 0, Label.DEPRESSIVE: 3}


def test_public_sized_split_counts():
    corpus = count_matched_corpus()
    s = split_corpus(corpus, 0.70, 0.0, seed=7)
    assert (len(s.train), len(s.validation), len(s.test)) == (2739, 0, 1175)
    # largest-remainder stratification, checked by counting
    assert class_distribution(s.train) == {Label.NON_DEPRESSIVE: 2050, Label.DEPRESSIVE: 689}
    assert class_distribution(s.test) == {Label.NON_DEPRESSIVE: 880, Label.DEPRESSIVE: 295}
    o = oversample_minority(s, seed=7)
    assert class_distribution(o.train) == {Label.NON_DEPRESSIVE: 2050, Label.DEPRESSIVE: 2050}
    assert len(o.train) == 4100 and len(o.oversample_log) == 1361


def test_split_with_validation():
    s = split_corpus(count_matched_corpus(), 0.70, 0.20, seed=7)
    assert len(s.validation) == 548 and len(s.train) == 2191 and len(s.test) == 1175
    for part in (s.train, s.validation, s.test):
        frac = part.labels.mean()
        assert abs(frac - 984 / 3914) < 0.005


def test_split_is_deterministic_and_disjoint():
    corpus = count_matched_corpus()
    a = split_corpus(corpus, 0.7, 0.2, seed=3)
    b = split_corpus(corpus, 0.7, 0.2, seed=3)
    assert a.to_manifest() == b.to_manifest()
    ids = [set(p.ids) for p in (a.train, a.validation, a.test)]
    assert not (ids[0] & ids[1] or ids[0] & ids[2] or ids[1] & ids[2])
    assert len(ids[0] | ids[1] | ids[2]) == len(corpus)


def test_split_errors():
    c = Corpus.from_records([("ক", Label.DEPRESSIVE), ("খ", Label.NON_DEPRESSIVE)])
    with pytest.raises(CorpusError):
        split_corpus(c, 1.0, 0.0)
    with pytest.raises(CorpusError, match="empty partition"):
        split_corpus(c, 0.3, 0.0)
    with pytest.raises(CorpusError):
        split_corpus(Corpus(()), 0.7, 0.0)
    three = Corpus.from_records([("ক", Label.DEPRESSIVE)] + [("খ", Label.NON_DEPRESSIVE)] * 2)
    with pytest.raises(CorpusError, match="absent from train"):
        split_corpus(three, 0.4, 0.0, seed=0)


def test_oversample_balanced_and_errors():
    c = Corpus.from_records([("ক", Label.DEPRESSIVE)] * 10 + [("খ", Label.NON_DEPRESSIVE)] * 10)
    s = DatasetSplits(c, Corpus(()), Corpus(()), 0, 0.7, 0.0)
    o = oversample_minority(s)
    assert o.train == c and o.oversample_log == () and o.oversampled
    with pytest.raises(CorpusError, match="already"):
        oversample_minority(o)
    single = DatasetSplits(Corpus.from_records([("ক", Label.DEPRESSIVE)] * 3), Corpus(()), Corpus(()), 0, 0.7, 0)
    with pytest.raises(CorpusError, match="single-class"):
        oversample_minority(single)


@settings(max_examples=40, deadline=None)
@given(
    n_dep=st.integers(2, 40), n_non=st.integers(2, 80), seed=st.integers(0, 2**16),
    train_ratio=st.sampled_from([0.6, 0.7, 0.8]), val_ratio=st.sampled_from([0.0, 0.2, 0.25]),
)
def test_split_oversample_invariants(n_dep, n_non, seed, train_ratio, val_ratio):
    rng = np.random.default_rng(seed)
    labels = [Label.DEPRESSIVE] * n_dep + [Label.NON_DEPRESSIVE] * n_non
    corpus = Corpus.from_records([(f"পোস্ট {i}", labels[j]) for i, j in enumerate(rng.permutation(len(labels)))])
    try:
        s = split_corpus(corpus, train_ratio, val_ratio, seed)
    except CorpusError:
        return
    n_test_exact = len(corpus) * (1 - train_ratio)
    assert abs(len(s.test) - n_test_exact) < 1 + 1e-9
    frac_test = class_distribution(s.test)[Label.DEPRESSIVE]
    assert abs(frac_test - len(s.test) * n_dep / len(corpus)) <= 1
    o = oversample_minority(s, seed)
    counts = class_distribution(o.train)
    assert counts[Label.DEPRESSIVE] == counts[Label.NON_DEPRESSIVE]
    before = Counter(s.train.ids)
    after = Counter(o.train.ids)
    assert all(after[i] >= before[i] for i in before)
    log = set(o.oversample_log)
    assert log <= set(s.train.ids)
    assert not log & set(o.test.ids) and not log & set(o.validation.ids)
    distinct = set(o.train.ids) | set(o.validation.ids) | set(o.test.ids)
    assert len(distinct) == len(corpus)
    pre = class_distribution(s.train)
    majority = max(Label, key=lambda lab: (pre[lab], lab.index))
    assert Counter(p.id for p in o.train if p.label is majority) == \
        Counter(p.id for p in s.train if p.label is majority)


def test_manifest_round_trip():
    corpus = count_matched_corpus()
    o = oversample_minority(split_corpus(corpus, 0.7, 0.2, seed=1), seed=1)
    m = o.to_manifest()
    assert len(m["partitions"]["train"]) == len(set(m["partitions"]["train"]))
    back = DatasetSplits.from_manifest(m, corpus)
    assert back.train.ids == o.train.ids
    assert back.test.ids == o.test.ids and back.oversample_log == o.oversample_log


def test_length_distribution():
    one = Corpus.from_records([("ক খ গ ঘ ঙ", Label.DEPRESSIVE)])
    assert length_distribution(one, LengthUnit.WORDS, 5)[Label.DEPRESSIVE] == {5: 1}
    corpus = count_matched_corpus()
    hist = length_distribution(corpus, "chars", bin_width=3)
    for lab, n in class_distribution(corpus).items():
        assert sum(hist[lab].values()) == n


def test_fixture_non_depressive_posts_are_longer(fixture_csv):
    means = mean_length(load_corpus(fixture_csv))
    assert means[Label.NON_DEPRESSIVE] > means[Label.DEPRESSIVE]


def test_top_words():
    c = Corpus.from_records([("ক খ খ", Label.DEPRESSIVE)])
    assert top_words(c, 2)[Label.DEPRESSIVE] == [("খ", 2), ("ক", 1)]
    assert top_words(c, 10)[Label.DEPRESSIVE] == [("খ", 2), ("ক", 1)]
    assert top_words(c, 10)[Label.NON_DEPRESSIVE] == []


def test_top_words_matches_counter(fixture_csv, rng):
    corpus = load_corpus(fixture_csv)
    sample = corpus.subset([corpus.ids[i] for i in rng.choice(len(corpus), 20, replace=False)])
    got = top_words(sample, k=1000)
    for lab in Label:
        counts: dict[str, int] = {}
        for post in sample:
            if post.label is lab:
                for tok in tokenize(clean(post.text)):
                    counts[tok] = counts.get(tok, 0) + 1
        assert dict(got[lab]) == counts
        assert got[lab] == sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
