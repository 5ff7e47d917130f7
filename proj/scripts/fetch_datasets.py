#!/usr/bin/env python3
"""Rebuild the bundled datasets under data/ from package-registry mirrors.

The canonical download hosts for MNIST, Fashion-MNIST and the Deterding vowel
table are often unreachable from build machines, so this script pulls copies
that are redistributed inside packages on PyPI and npm:

  * MNIST         -- ``mnist_hub`` wheel (PyPI), ``mnist/data/mnist.pkl.gz``.
                     The first 50000 training images in original order, stored
                     as float32 pixel/256, which converts back to uint8 exactly.
  * Fashion-MNIST -- ``fashion-mnist`` tarball (npm), one JSON file per class
                     with 7000 uint8 images each. The original global order is
                     not recoverable, so the first 1000 images of every class
                     are interleaved round-robin (class 0, 1, ..., 9, 0, 1, ...).
  * Vowel         -- ``keel_ds`` wheel (PyPI), ``vowel.dat`` (990 rows:
                     train/test flag, speaker, sex, 10 features, class 0..10).

Outputs (gzip-compressed IDX files are read directly by the C++ loader):

  data/mnist/train-images-idx3-ubyte.gz  (first 10000 images)
  data/mnist/train-labels-idx1-ubyte.gz
  data/fashion/train-images-idx3-ubyte.gz (10000 interleaved images)
  data/fashion/train-labels-idx1-ubyte.gz
  data/vowel/vowel.data
"""

import argparse
import gzip
import io
import json
import pathlib
import pickle
import struct
import subprocess
import tarfile
import tempfile
import zipfile

import numpy as np

IMAGE_COUNT = 10000
FASHION_PER_CLASS = 1000


def write_idx_images(path, images):
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        f.write(images.tobytes())


def write_idx_labels(path, labels):
    labels = np.asarray(labels, dtype=np.uint8)
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, labels.shape[0]))
        f.write(labels.tobytes())


def pip_fetch(package, workdir):
    subprocess.run(
        ["pip", "download", "--no-deps", "-q", package, "-d", str(workdir)], check=True
    )
    name = package.replace("-", "_").lower()
    for p in workdir.iterdir():
        if p.name.lower().startswith(name) and p.suffix == ".whl":
            return p
    raise FileNotFoundError(package)


def build_mnist(out, workdir):
    wheel = pip_fetch("mnist_hub", workdir)
    with zipfile.ZipFile(wheel) as z:
        raw = z.read("mnist/data/mnist.pkl.gz")
    train, _, _ = pickle.load(gzip.open(io.BytesIO(raw)), encoding="latin1")
    pixels = np.rint(train[0][:IMAGE_COUNT] * 256.0)
    assert pixels.max() <= 255 and np.allclose(pixels / 256.0, train[0][:IMAGE_COUNT])
    out.mkdir(parents=True, exist_ok=True)
    write_idx_images(out / "train-images-idx3-ubyte.gz", pixels.reshape(-1, 28, 28))
    write_idx_labels(out / "train-labels-idx1-ubyte.gz", train[1][:IMAGE_COUNT])


def build_fashion(out, workdir):
    subprocess.run(["npm", "pack", "fashion-mnist@1.1.0"], cwd=workdir, check=True,
                   capture_output=True)
    per_class = []
    with tarfile.open(workdir / "fashion-mnist-1.1.0.tgz") as tar:
        for label in range(10):
            member = tar.extractfile(f"package/src/clothes/{label}.json")
            data = json.load(member)["data"]
            per_class.append(np.asarray(data[:FASHION_PER_CLASS], dtype=np.uint8))
    images, labels = [], []
    for i in range(FASHION_PER_CLASS):
        for label in range(10):
            images.append(per_class[label][i].reshape(28, 28))
            labels.append(label)
    out.mkdir(parents=True, exist_ok=True)
    write_idx_images(out / "train-images-idx3-ubyte.gz", images)
    write_idx_labels(out / "train-labels-idx1-ubyte.gz", labels)


def build_vowel(out, workdir):
    wheel = pip_fetch("keel_ds", workdir)
    with zipfile.ZipFile(wheel) as z:
        text = z.read("keel_ds/data/balanced/raw/vowel.dat").decode()
    out.mkdir(parents=True, exist_ok=True)
    header = "# train_test,speaker,sex,f0,f1,f2,f3,f4,f5,f6,f7,f8,f9,class\n"
    (out / "vowel.data").write_text(header + text.strip() + "\n")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parents[1] / "data"))
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        build_mnist(out / "mnist", tmp)
        build_fashion(out / "fashion", tmp)
        build_vowel(out / "vowel", tmp)
    print(f"datasets written to {out}")


if __name__ == "__main__":
    main()
