"""Shared fixtures: synthetic corpora and pipeline inputs."""

from __future__ import annotations

import json

import numpy as np
import pytest

from compforge.corpus import ParallelExample

VOCAB = [f"w{i}" for i in range(14)]


def random_sentence(rng: np.random.Generator, low: int = 4, high: int = 9) -> str:
    length = int(rng.integers(low, high))
    return " ".join(rng.choice(VOCAB[:12], size=length))


def make_examples(sentences: list[str]) -> list[ParallelExample]:
    return [
        ParallelExample(str(i), tuple(s.split()), tuple(s.split()))
        for i, s in enumerate(sentences)
    ]


@pytest.fixture
def pipeline_inputs(tmp_path):
    """Write a small but complete set of pipeline inputs; returns paths."""
    rng = np.random.default_rng(1234)
    train_path = tmp_path / "train.tsv"
    with open(train_path, "w", encoding="utf-8") as fh:
        for _ in range(300):
            s = random_sentence(rng)
            fh.write(f"{s}\t{s}\n")

    pool_path = tmp_path / "pool.jsonl"
    pool_ids = []
    with open(pool_path, "w", encoding="utf-8") as fh:
        for i in range(60):
            s = random_sentence(rng)
            if i % 11 == 0:
                s += " zzz"  # token the training corpus never contains
            if i % 17 == 0 and i > 0:
                s = prev  # exact duplicate of an earlier example
            record = {"id": f"p{i}", "source": s, "target": s}
            fh.write(json.dumps(record) + "\n")
            pool_ids.append(f"p{i}")
            prev = s

    dump_path = tmp_path / "ensemble.jsonl"
    with open(dump_path, "w", encoding="utf-8") as fh:
        for pid in pool_ids:
            positions = 3
            support = [["A", "B", "C"] for _ in range(positions)]
            probs = []
            for _ in range(3):
                probs.append([[float(x) for x in rng.dirichlet([1.0] * 3)] for _ in range(positions)])
            fh.write(json.dumps({"id": pid, "support": support, "probs": probs}) + "\n")

    return {
        "train": train_path,
        "pool": pool_path,
        "dump": dump_path,
        "tmp": tmp_path,
    }
