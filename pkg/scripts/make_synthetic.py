#!/usr/bin/env python3
"""Generate a synthetic repository/corpus pair for pipeline experiments.

Every ambiguous name gets 2-4 entities; each entity mention is flanked by
entity-specific signature words, with shared noise words kept at distance
two or more so a K=1 window stays discriminative.
"""

import argparse
from pathlib import Path

from weaklink.synth import SynthConfig, write_files


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("synthetic"),
                        help="output directory (default: ./synthetic)")
    parser.add_argument("--names", type=int, default=50,
                        help="ambiguous names to generate")
    parser.add_argument("--mentions", type=int, default=10,
                        help="mentions per entity")
    parser.add_argument("--noise-words", type=int, default=30,
                        help="size of the shared far-word pool")
    parser.add_argument("--sibling-noise-rate", type=float, default=0.5,
                        help="chance a far word comes from a sibling signature")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    config = SynthConfig(names=args.names, mentions_per_entity=args.mentions,
                         noise_words=args.noise_words,
                         sibling_noise_rate=args.sibling_noise_rate,
                         seed=args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    repo_path = args.out / "repo.jsonl"
    corpus_path = args.out / "corpus.jsonl"
    repo, corpus = write_files(config, repo_path, corpus_path)
    mentions = sum(len(sents) for sents in corpus.values())
    print(f"wrote {repo_path} ({len(repo.entities)} entities)")
    print(f"wrote {corpus_path} ({len(corpus)} pages, {mentions} sentences)")


if __name__ == "__main__":
    main()
