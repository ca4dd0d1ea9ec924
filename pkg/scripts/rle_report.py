"""Serialized size of RLE versus dense per-row flags as NULL density grows."""
import argparse
import random

from mixstore.storage import dense_to_bytes, rle_encode, rle_to_bytes


def column(rng, n, null_density, multi_rate):
    cells = []
    for _ in range(n):
        if rng.random() < null_density:
            cells.append(None)
        else:
            k = rng.randint(2, 3) if rng.random() < multi_rate else 1
            cells.append(tuple(rng.randrange(10_000) for _ in range(k)))
    return cells


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rows", type=int, default=10_000)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--multi-rate", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    print("null_density\trle_bytes\tdense_bytes\tratio")
    for step in range(0, 11):
        density = step / 10
        rle = dense = 0
        for _ in range(args.trials):
            cells = column(rng, args.rows, density, args.multi_rate)
            rle += len(rle_to_bytes(rle_encode(cells)))
            dense += len(dense_to_bytes(cells))
        print(f"{density:.1f}\t{rle // args.trials}\t{dense // args.trials}\t{rle / dense:.3f}")


if __name__ == "__main__":
    main()
