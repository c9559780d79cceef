#!/usr/bin/env python3
# Copyright 2026 The flatprior Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes MNIST IDX files from the digit JSON bundled in the `mnist` npm package.

The npm package ships 10,000 MNIST training digits (about 1,000 per class) as
pixel/255 values rounded to three decimals; multiplying by 255 and rounding
recovers the original bytes. Digits are interleaved round-robin by class so
the file order is not sorted by label.

Usage:
  tools/make_mnist_idx.py [--package DIR] [--out data/mnist]

Without --package the script runs `npm pack mnist` in a temporary directory.
"""

import argparse
import json
import os
import struct
import subprocess
import tarfile
import tempfile


def fetch_package(workdir):
    subprocess.run(["npm", "pack", "mnist", "--silent"], cwd=workdir, check=True,
                   stdout=subprocess.DEVNULL)
    tgz = [f for f in os.listdir(workdir) if f.endswith(".tgz")][0]
    with tarfile.open(os.path.join(workdir, tgz)) as tar:
        tar.extractall(workdir)
    return os.path.join(workdir, "package")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--package", help="unpacked mnist npm package directory")
    parser.add_argument("--out", default="data/mnist")
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        pkg = args.package or fetch_package(tmp)
        per_digit = []
        for digit in range(10):
            with open(os.path.join(pkg, "src", "digits", f"{digit}.json")) as f:
                raw = json.load(f)["data"]
            count = len(raw) // 784
            per_digit.append([raw[i * 784:(i + 1) * 784] for i in range(count)])

    images, labels = [], []
    longest = max(len(d) for d in per_digit)
    for k in range(longest):
        for digit in range(10):
            if k < len(per_digit[digit]):
                images.append(per_digit[digit][k])
                labels.append(digit)

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "train-images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(min(255, max(0, int(round(v * 255)))) for v in img))
    with open(os.path.join(args.out, "train-labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))
    print(f"wrote {len(images)} examples to {args.out}")


if __name__ == "__main__":
    main()
