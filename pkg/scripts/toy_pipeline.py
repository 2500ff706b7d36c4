"""Build a synthetic workspace and run every CLI stage over it."""

import argparse
import logging
import os
import sys

from kgsumm.cli import main as cli
from kgsumm.synthetic import e2e_corpus, e2e_embeddings, write_workspace


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("workspace", help="directory to create")
    parser.add_argument("--docs", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    corpus = e2e_corpus(n_docs=args.docs, seed=args.seed)
    os.makedirs(args.workspace, exist_ok=True)
    cfg = write_workspace(args.workspace, corpus, e2e_embeddings(corpus, seed=args.seed), "finance", ptt_threshold=0.4, seed=args.seed)
    doc_id = corpus.documents[0].id
    for cmd in (
        ["stats"],
        ["build-dkb"],
        ["segment", "--doc-id", doc_id],
        ["parse", "--doc-id", doc_id],
        ["summarize", "--doc-id", doc_id, "--ratio", "0.2"],
        ["evaluate"],
    ):
        code = cli(cmd + ["--config", cfg])
        if code:
            return code
    with open(os.path.join(args.workspace, "out", "report_finance.txt"), encoding="utf-8") as fh:
        print(fh.read(), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
