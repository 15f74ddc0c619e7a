"""Write the 5000-digit MNIST subset shipped inside the mlxtend wheel as IDX files.

The library never downloads anything. This script is the one place that touches
a package archive: it pulls ``mlxtend/data/data/mnist_5k.csv.gz`` out of an
installed mlxtend (or a downloaded wheel) and re-encodes it as gzip'd IDX so the
loaders in ``polariton_rc.mnist`` can read it like the official files.

    pip download mlxtend --no-deps -d /tmp/wheels
    python scripts/make_mnist_subset.py --wheel /tmp/wheels/mlxtend-*.whl --out data/

The official 60000/10000 files from the MNIST site work with every command too.
"""

import argparse
import glob
import gzip
import io
import zipfile
from pathlib import Path

import numpy as np

from polariton_rc.mnist import write_idx_images, write_idx_labels

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def read_csv_bytes(wheel):
    if wheel:
        paths = glob.glob(wheel)
        if not paths:
            raise SystemExit(f"no wheel matches {wheel}")
        with zipfile.ZipFile(paths[0]) as zf:
            return zf.read(MEMBER)
    import mlxtend  # noqa: F401  (only needed when no wheel is given)

    path = Path(mlxtend.__file__).parent / "data" / "data" / "mnist_5k.csv.gz"
    return path.read_bytes()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--wheel", help="path or glob of an mlxtend wheel")
    ap.add_argument("--out", default="data", help="output directory")
    args = ap.parse_args()

    raw = gzip.decompress(read_csv_bytes(args.wheel)).decode()
    table = np.loadtxt(io.StringIO(raw), delimiter=",").astype(np.uint8)
    images = table[:, :-1].reshape(-1, 28, 28)
    labels = table[:, -1]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_idx_images(out / "mnist5k-images-idx3-ubyte.gz", images)
    write_idx_labels(out / "mnist5k-labels-idx1-ubyte.gz", labels)
    print(f"wrote {len(labels)} digits to {out}/ (class counts {np.bincount(labels).tolist()})")


if __name__ == "__main__":
    main()
