"""Train the relation model on synthetic pairs and print the loss curve."""

import argparse
import logging
import sys

from kgsumm.relation_model import ModelConfig, TrainConfig, save_checkpoint, train
from kgsumm.synthetic import pair_corpus


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=100)
    parser.add_argument("--epochs", type=int, default=50)
    parser.add_argument("--batch-size", type=int, default=20)
    parser.add_argument("--lr", type=float, default=0.001)
    parser.add_argument("--emb-dim", type=int, default=8)
    parser.add_argument("--hidden", type=int, default=16)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--save", help="write the trained checkpoint here")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING)

    pairs = pair_corpus(args.pairs, seed=args.seed)
    cfg = TrainConfig(lr=args.lr, batch_size=args.batch_size, epochs=args.epochs, seed=args.seed, max_decode_len=8)
    result = train(pairs, cfg, ModelConfig(emb_dim=args.emb_dim, hidden=args.hidden))
    for epoch, loss in enumerate(result.history, 1):
        print(f"epoch {epoch:3d}  loss {loss:.4f}")
    print(f"dataset loss {result.initial_loss:.4f} -> {result.final_loss:.4f} (ratio {result.final_loss / result.initial_loss:.3f})")
    if args.save:
        save_checkpoint(result.model, args.save, cfg)
    return 0


if __name__ == "__main__":
    sys.exit(main())
