#!/usr/bin/env python3
# Copyright 2026 The codeq Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Convert the 10,000 MNIST digits shipped in the npm `mnist` package to IDX.

The package stores each class as a flat JSON array of 784-pixel images with
values in [0, 1] (three decimals). Pixels are mapped back with round(v * 255).
Classes are interleaved round-robin so any prefix is class balanced; the
first --train samples go to train-*, the rest to t10k-*.

    npm pack mnist@1.1.0 && tar xzf mnist-1.1.0.tgz
    python3 scripts/mnist_from_npm.py package/src/digits data/mnist
"""

import argparse
import json
import pathlib
import struct

PIXELS = 28 * 28


def write_idx(out_dir, prefix, images, labels):
    with open(out_dir / f"{prefix}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(labels), 28, 28))
        for img in images:
            f.write(bytes(img))
    with open(out_dir / f"{prefix}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("digits_dir", type=pathlib.Path)
    ap.add_argument("out_dir", type=pathlib.Path)
    ap.add_argument("--train", type=int, default=8000)
    args = ap.parse_args()

    per_class = []
    for digit in range(10):
        data = json.loads((args.digits_dir / f"{digit}.json").read_text())["data"]
        if len(data) % PIXELS:
            raise SystemExit(f"{digit}.json: length {len(data)} is not a multiple of {PIXELS}")
        imgs = [
            [max(0, min(255, round(v * 255))) for v in data[i : i + PIXELS]]
            for i in range(0, len(data), PIXELS)
        ]
        per_class.append(imgs)

    images, labels = [], []
    longest = max(len(c) for c in per_class)
    for i in range(longest):
        for digit, imgs in enumerate(per_class):
            if i < len(imgs):
                images.append(imgs[i])
                labels.append(digit)

    args.out_dir.mkdir(parents=True, exist_ok=True)
    n_train = min(args.train, len(labels))
    write_idx(args.out_dir, "train", images[:n_train], labels[:n_train])
    write_idx(args.out_dir, "t10k", images[n_train:], labels[n_train:])
    print(f"wrote {n_train} train and {len(labels) - n_train} test images to {args.out_dir}")


if __name__ == "__main__":
    main()
