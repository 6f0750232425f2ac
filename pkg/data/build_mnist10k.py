"""Rebuild ``mnist10k/`` from the ``mnist`` npm package (version 1.1.0).

    npm pack mnist@1.1.0 && tar xzf mnist-1.1.0.tgz
    python data/build_mnist10k.py package/src/digits data/mnist10k

The package ships 10,000 MNIST digits as JSON arrays of intensities in
[0, 1]; multiplying by 255 and rounding recovers the original bytes. The
digits are split per class 80/20 into train and test with a fixed seed.
"""
import argparse
import gzip
import json
import struct
from pathlib import Path

import numpy as np

SEED = 20240601


def write_idx(path, arr, magic):
    with gzip.GzipFile(path, "wb", mtime=0) as fh:
        fh.write(struct.pack(">I", magic))
        for size in arr.shape:
            fh.write(struct.pack(">I", size))
        fh.write(arr.tobytes())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("digits", type=Path, help="directory holding 0.json .. 9.json")
    ap.add_argument("out", type=Path)
    args = ap.parse_args()
    images, labels = [], []
    for d in range(10):
        a = np.array(json.loads((args.digits / f"{d}.json").read_text())["data"])
        a = np.round(a * 255).astype(np.uint8).reshape(-1, 28, 28)
        images.append(a)
        labels.append(np.full(len(a), d, np.uint8))
    x, y = np.concatenate(images), np.concatenate(labels)
    rng = np.random.default_rng(SEED)
    train, test = [], []
    for d in range(10):
        idx = rng.permutation(np.flatnonzero(y == d))
        k = len(idx) // 5
        test.extend(idx[:k])
        train.extend(idx[k:])
    train, test = rng.permutation(train), rng.permutation(test)
    args.out.mkdir(parents=True, exist_ok=True)
    write_idx(args.out / "train-images-idx3-ubyte.gz", x[train], 0x803)
    write_idx(args.out / "train-labels-idx1-ubyte.gz", y[train], 0x801)
    write_idx(args.out / "t10k-images-idx3-ubyte.gz", x[test], 0x803)
    write_idx(args.out / "t10k-labels-idx1-ubyte.gz", y[test], 0x801)
    print(f"{len(train)} train / {len(test)} test")


if __name__ == "__main__":
    main()
