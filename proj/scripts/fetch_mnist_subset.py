#!/usr/bin/env python3
"""Build the desk MNIST subset as IDX files.

The 10,000 digits bundled with the `mnist` npm package are shuffled with a
fixed seed and split into 4096 training and 1024 test images. Output files
follow the IDX layout so `gjs convert-idx` can ingest them.
"""
import argparse
import json
import pathlib
import random
import struct
import subprocess
import tarfile
import tempfile

TRAIN = 4096
TEST = 1024
SIDE = 28


def load_digits(package_dir):
    images, labels = [], []
    for digit in range(10):
        raw = json.loads((package_dir / "src" / "digits" / f"{digit}.json").read_text())["data"]
        count = len(raw) // (SIDE * SIDE)
        for k in range(count):
            pixels = raw[k * SIDE * SIDE:(k + 1) * SIDE * SIDE]
            images.append(bytes(min(255, max(0, round(v * 255))) for v in pixels))
            labels.append(digit)
    return images, labels


def write_idx_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), SIDE, SIDE))
        for img in images:
            f.write(img)


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    parser.add_argument("--seed", type=int, default=20200607)
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(["npm", "pack", "mnist@1.1.0"], cwd=tmp, check=True, capture_output=True)
        tarball = next(pathlib.Path(tmp).glob("mnist-*.tgz"))
        with tarfile.open(tarball) as tar:
            tar.extractall(tmp)
        images, labels = load_digits(pathlib.Path(tmp) / "package")

    order = list(range(len(images)))
    random.Random(args.seed).shuffle(order)
    train, test = order[:TRAIN], order[TRAIN:TRAIN + TEST]
    write_idx_images(out / "mnist-train-images-idx3-ubyte", [images[i] for i in train])
    write_idx_labels(out / "mnist-train-labels-idx1-ubyte", [labels[i] for i in train])
    write_idx_images(out / "mnist-test-images-idx3-ubyte", [images[i] for i in test])
    write_idx_labels(out / "mnist-test-labels-idx1-ubyte", [labels[i] for i in test])
    print(f"wrote {TRAIN} train / {TEST} test images to {out}")


if __name__ == "__main__":
    main()
