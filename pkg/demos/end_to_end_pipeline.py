#!/usr/bin/env python3
"""Run the whole test-set construction pipeline on synthetic inputs.

Generates a toy training corpus, a candidate pool, and a fake ensemble
dump, then runs all six stages twice to show that the artifact digests are
reproducible. Pass --keep to leave the generated files behind for a look.
"""

import argparse
import json
import shutil
import tempfile
from pathlib import Path

import numpy as np

from compforge.pipeline import PipelineConfig, run_pipeline

VOCAB = [f"w{i}" for i in range(12)]


def make_inputs(root: Path, seed: int) -> dict[str, Path]:
    rng = np.random.default_rng(seed)

    def sentence() -> str:
        length = int(rng.integers(4, 9))
        return " ".join(VOCAB[int(i)] for i in rng.integers(0, len(VOCAB), size=length))

    train = root / "train.tsv"
    with open(train, "w", encoding="utf-8") as fh:
        for _ in range(300):
            fh.write(f"{sentence()}\t{sentence()}\n")

    pool = root / "pool.jsonl"
    targets = []
    with open(pool, "w", encoding="utf-8") as fh:
        for i in range(80):
            tgt = sentence()
            if i % 13 == 0:
                tgt += " rare_token"  # will be OOV-filtered
            targets.append((f"p{i}", tgt))
            fh.write(json.dumps({"id": f"p{i}", "source": sentence(), "target": tgt}) + "\n")

    dump = root / "ensemble.jsonl"
    with open(dump, "w", encoding="utf-8") as fh:
        for example_id, tgt in targets:
            positions = len(tgt.split())
            support = ["a", "b", "c"]
            # probs are member-major: probs[m][l] is member m's distribution
            # over position l's support
            members = [
                [list(rng.dirichlet([1.0, 1.0, 1.0])) for _ in range(positions)]
                for _ in range(3)
            ]
            fh.write(
                json.dumps({"id": example_id, "support": [support] * positions, "probs": members})
                + "\n"
            )
    return {"train": train, "pool": pool, "dump": dump}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0, help="input-generation seed")
    parser.add_argument("--keep", action="store_true", help="keep the working directory")
    args = parser.parse_args()

    root = Path(tempfile.mkdtemp(prefix="pipeline_demo_"))
    try:
        paths = make_inputs(root, args.seed)
        config = PipelineConfig(
            train_path=str(paths["train"]),
            pool_path=str(paths["pool"]),
            ensemble_dump_path=str(paths["dump"]),
            out_dir=str(root / "out"),
            oov_min_count=1,
            dict_min_count=2,
            max_n=4,
            pool_k=50,
            discard_top=5,
            window=30,
            sample=8,
            seed=7,
        )
        manifest = run_pipeline(config)

        print("stages:")
        for stage in manifest.stages:
            print(f"  {stage['name']:<18} {stage['in']:>4} in  {stage['out']:>4} out")
        print("\nartifacts:")
        for artifact in manifest.artifacts:
            print(f"  {artifact['name']:<22} {artifact['records']:>4} records  "
                  f"sha256 {artifact['sha256'][:12]}…")

        testset = (root / "out" / "testset.jsonl").read_text(encoding="utf-8").splitlines()
        print(f"\nfirst test-set rows (of {len(testset)}):")
        for line in testset[:3]:
            row = json.loads(line)
            print(f"  {row['id']:<4} {row['target']}")

        rerun = run_pipeline(
            PipelineConfig(**{**config.__dict__, "out_dir": str(root / "out2")})
        )
        same = [a["sha256"] for a in manifest.artifacts] == [
            a["sha256"] for a in rerun.artifacts
        ]
        print(f"\nrerun in a fresh directory reproduces every digest: {same}")
        if args.keep:
            print(f"working directory kept at {root}")
    finally:
        if not args.keep:
            shutil.rmtree(root, ignore_errors=True)


if __name__ == "__main__":
    main()
