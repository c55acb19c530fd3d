"""Write an MNIST IDX image file from the 5000-digit CSV bundled with mlxtend.

The CSV rows are sorted by class (500 per digit), so every fifth row is
taken to get a class-balanced subset.

    python scripts/make_mnist_idx.py out/mnist-1k-images-idx3-ubyte --count 1000
"""

import argparse
import gzip
import importlib.util
import os
import sys

import numpy as np

from qrproj.datasets import write_idx_images


def bundled_csv():
    spec = importlib.util.find_spec("mlxtend")
    if spec is None:
        return None
    path = os.path.join(os.path.dirname(spec.origin), "data", "data", "mnist_5k.csv.gz")
    return path if os.path.exists(path) else None


def convert(csv_path, out_path, count=1000):
    with gzip.open(csv_path, "rt") as fh:
        table = np.loadtxt(fh, delimiter=",")
    pixels = table[:, :-1]
    stride = max(1, pixels.shape[0] // count)
    images = pixels[::stride][:count].reshape(-1, 28, 28)
    write_idx_images(out_path, images.astype(np.uint8))
    return images.shape[0]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out")
    ap.add_argument("--count", type=int, default=1000)
    ap.add_argument("--csv", default=None, help="gzipped CSV, 784 pixels then a label per row")
    args = ap.parse_args(argv)
    csv_path = args.csv or bundled_csv()
    if csv_path is None:
        sys.exit("no CSV given and mlxtend's bundled MNIST sample was not found")
    n = convert(csv_path, args.out, args.count)
    print(f"wrote {n} images to {args.out}")


if __name__ == "__main__":
    main()
