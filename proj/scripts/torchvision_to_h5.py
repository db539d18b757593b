#!/usr/bin/env python3
# Copyright 2026 The ethnipipe Authors
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
"""Writes torchvision's ImageNet VGG16 conv weights in the Keras h5 layout.

Use this when the Keras notop file is not at hand:

    python3 scripts/torchvision_to_h5.py vgg16_notop.h5
    ethnipipe convert-weights vgg16_notop.h5 --out vgg16.epwa

Kernels are written HWIO; the converter would also accept OIHW.
Needs torch, torchvision and h5py, and network access on first use.
"""
import argparse

import h5py
import torchvision

# torchvision `features` indices of the thirteen conv layers, in order.
CONV_INDICES = [0, 2, 5, 7, 10, 12, 14, 17, 19, 21, 24, 26, 28]
BLOCKS = [2, 2, 3, 3, 3]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out", help="output .h5 path")
    args = parser.parse_args()

    model = torchvision.models.vgg16(weights=torchvision.models.VGG16_Weights.IMAGENET1K_V1)
    names = [f"block{b + 1}_conv{j + 1}" for b, n in enumerate(BLOCKS) for j in range(n)]
    with h5py.File(args.out, "w") as f:
        for name, idx in zip(names, CONV_INDICES):
            conv = model.features[idx]
            kernel = conv.weight.detach().numpy().transpose(2, 3, 1, 0)  # OIHW -> HWIO
            f.create_dataset(f"{name}/{name}/kernel:0", data=kernel.astype("float32"))
            f.create_dataset(f"{name}/{name}/bias:0", data=conv.bias.detach().numpy().astype("float32"))
    print(f"wrote {len(names)} conv layers to {args.out}")


if __name__ == "__main__":
    main()
