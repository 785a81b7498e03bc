#!/usr/bin/env python3
"""Convert the 10k-digit MNIST subset bundled with the npm `mnist` package
into canonical big-endian IDX files.

The npm package (https://www.npmjs.com/package/mnist) ships ten JSON files,
one per digit class, each holding a flat stream of 784-pixel images with
values in [0, 1] (original uint8 divided by 255, rounded to 3 decimals).
We recover the uint8 pixels, interleave the classes with a fixed shuffle,
and emit:

    mnist10k-images-idx3-ubyte   magic 0x00000803, 10000 x 28 x 28 uint8
    mnist10k-labels-idx1-ubyte   magic 0x00000801, 10000 uint8

Usage: make_mnist_idx.py <extracted-npm-package-dir> <output-dir>
"""

import json
import os
import struct
import sys

import numpy as np

SHUFFLE_SEED = 1234


def main() -> int:
    if len(sys.argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    pkg_dir, out_dir = sys.argv[1], sys.argv[2]

    images = []
    labels = []
    for digit in range(10):
        path = os.path.join(pkg_dir, "src", "digits", f"{digit}.json")
        flat = np.asarray(json.load(open(path))["data"], dtype=np.float64)
        if flat.size % 784 != 0:
            raise ValueError(f"{path}: pixel stream not a multiple of 784")
        imgs = np.rint(flat.reshape(-1, 784) * 255.0).astype(np.uint8)
        images.append(imgs)
        labels.append(np.full(len(imgs), digit, dtype=np.uint8))

    x = np.concatenate(images)
    y = np.concatenate(labels)
    order = np.random.RandomState(SHUFFLE_SEED).permutation(len(x))
    x, y = x[order], y[order]

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "mnist10k-images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(x), 28, 28))
        f.write(x.tobytes())
    with open(os.path.join(out_dir, "mnist10k-labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x801, len(y)))
        f.write(y.tobytes())

    counts = np.bincount(y, minlength=10)
    print(f"wrote {len(x)} images, class counts: {counts.tolist()}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
