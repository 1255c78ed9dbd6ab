#!/usr/bin/env python3
"""Build decompressed MNIST IDX files from the `mnist` npm package.

The package ships 10,000 digits as JSON (one file per class, pixels scaled to
[0, 1] and rounded to three decimals). Bytes are recovered by round(v * 255),
samples are interleaved with a fixed shuffle, and written as

    <out>/images-idx3-ubyte
    <out>/labels-idx1-ubyte

Usage: mnist_from_npm.py --out data/mnist [--tarball mnist-1.1.0.tgz]
"""

import argparse
import json
import random
import struct
import subprocess
import sys
import tarfile
import tempfile
from pathlib import Path

PACKAGE = "mnist@1.1.0"
SIDE = 28


def fetch_tarball(workdir: Path) -> Path:
    out = subprocess.run(["npm", "pack", PACKAGE, "--silent"], cwd=workdir,
                         check=True, capture_output=True, text=True)
    return workdir / out.stdout.strip().splitlines()[-1]


def load_digits(tarball: Path):
    samples = []
    with tarfile.open(tarball) as tar:
        for label in range(10):
            member = tar.extractfile(f"package/src/digits/{label}.json")
            data = json.load(member)["data"]
            n = len(data) // (SIDE * SIDE)
            if n * SIDE * SIDE != len(data):
                sys.exit(f"digit {label}: {len(data)} values is not a whole number of images")
            for i in range(n):
                chunk = data[i * SIDE * SIDE:(i + 1) * SIDE * SIDE]
                pixels = bytes(min(255, max(0, round(v * 255))) for v in chunk)
                samples.append((pixels, label))
    return samples


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True, type=Path)
    ap.add_argument("--tarball", type=Path, help="use an already downloaded package tarball")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        tarball = args.tarball or fetch_tarball(Path(tmp))
        samples = load_digits(tarball)

    random.Random(args.seed).shuffle(samples)
    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(samples), SIDE, SIDE))
        for pixels, _ in samples:
            f.write(pixels)
    with open(args.out / "labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(samples)))
        f.write(bytes(label for _, label in samples))
    print(f"wrote {len(samples)} images to {args.out}")


if __name__ == "__main__":
    main()
