import json
import os
import pathlib
import subprocess

import pytest

SCHEMA_DIR = pathlib.Path(os.environ.get("CONVERSE_SCHEMA_DIR", pathlib.Path(__file__).parents[2] / "schema"))


def load_schema(name):
    return json.loads((SCHEMA_DIR / name).read_text())


@pytest.fixture(scope="session")
def cli():
    path = os.environ.get("CONVERSE_CLI")
    if not path or not os.path.exists(path):
        pytest.skip("command-line tool not available")
    return path


@pytest.fixture(scope="session")
def world(cli, tmp_path_factory):
    """A small synthetic world with a trained scorer and a history store."""
    root = tmp_path_factory.mktemp("world")
    cfg = root / "config.json"
    cfg.write_text(json.dumps({
        "features": {"embedding_dim": 16, "pos_buckets": 10},
        "synth": {"contexts": 120, "store_contexts": 40, "dialogues": 40},
        "scorer": {"h1": 16, "h2": 8, "max_epochs": 10, "grid": {"learning_rates": [1e-3], "l2": [1e-3]}},
    }))

    def run(*args):
        subprocess.run([cli, *args, "--seed", "1", "--config", str(cfg)], check=True, capture_output=True)

    run("generate-synthetic", "--out", str(root / "synth"))
    run("train-scorer", "--data", str(root / "synth" / "amt.jsonl"), "--out", str(root / "scorer"))
    run("build-store", "--logs", str(root / "synth" / "dialogues.jsonl"),
        "--scorer", str(root / "scorer" / "scorer.json"), "--out", str(root / "store"))
    return root
