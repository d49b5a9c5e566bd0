import subprocess

import numpy as np
import pytest

import converse


def test_layout_dimensions():
    assert converse.FeatureLayout().total_dim == 458
    small = converse.FeatureLayout(embedding_dim=16, pos_buckets=10)
    assert small.total_dim == 232
    groups = small.groups()
    assert sum(length for _, _, length in groups) == small.total_dim
    assert converse.REWARD_FEATURE_DIM == 23


def test_scores_stay_in_label_range():
    layout = converse.FeatureLayout(embedding_dim=16, pos_buckets=10)
    net = converse.ScoringNet(layout, h1=12, h2=6, seed=3)
    x = np.random.default_rng(0).normal(size=(net.input_dim, 200))
    s = net.scores(x)
    assert s.shape == (200,)
    assert np.all((s >= 1.0) & (s <= 5.0))
    probs, score = net.forward(x[:, 0])
    assert probs.sum() == pytest.approx(1.0)
    assert score == pytest.approx(float(np.dot(probs, np.arange(1, 6))))


def test_features_match_layout():
    layout = converse.FeatureLayout(embedding_dim=16, pos_buckets=10)
    ex = converse.FeatureExtractor(layout)
    x = ex.features([("user", "do you like movies?")], "Alicebot", "I love movies.")
    assert x.shape == (layout.total_dim,)
    with pytest.raises(converse.ConverseError):
        converse.ScoringNet(layout, 4, 3).forward(np.zeros(3))


def test_tokenize():
    assert converse.tokenize("Hello, World") == ["hello", "world"]


def test_simulate_from_store(world):
    r = converse.simulate(str(world / "store"), "random", str(world / "scorer" / "scorer.json"),
                          episodes=20, seed=2)
    assert r.episodes == 20
    assert -2.0 <= r.avg_reward_per_step <= 2.0
    again = converse.simulate(str(world / "store"), "random", str(world / "scorer" / "scorer.json"),
                              episodes=20, seed=2, threads=3)
    assert again.as_dict() == r.as_dict()


def test_cli_exit_codes(cli, tmp_path):
    assert subprocess.run([cli, "no-such-command"], capture_output=True).returncode == 1
    missing = subprocess.run([cli, "eval-scorer", "--model", str(tmp_path / "none.json"),
                              "--data", str(tmp_path / "none.jsonl")], capture_output=True)
    assert missing.returncode == 1
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"context": []}\n')
    r = subprocess.run([cli, "ingest-amt", "--data", str(bad), "--out", str(tmp_path / "o")], capture_output=True)
    assert r.returncode == 1
    assert b"line 1" in r.stderr


def test_simulate_tsv(cli, world):
    r = subprocess.run([cli, "simulate", "--store", str(world / "store"), "--policy", "supervised",
                        "--outcome", str(world / "scorer" / "scorer.json"), "--episodes", "30"],
                       capture_output=True, text=True, check=True)
    header, row = r.stdout.strip().split("\n")
    cols = dict(zip(header.split("\t"), row.split("\t")))
    for key in ("avg_return", "avg_reward_per_step", "avg_length"):
        float(cols[key])
