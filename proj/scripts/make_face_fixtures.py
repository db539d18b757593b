#!/usr/bin/env python3
# Copyright 2026 The ethnipipe Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http:#www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates the committed face fixtures under tests/fixtures/.

The source image is scikit-image's public-domain astronaut photograph.
"""
import numpy as np
import skimage.data
import skimage.io
from skimage.transform import resize

a = skimage.data.astronaut()
rgb = (resize(a, (128, 128), anti_aliasing=True) * 255).round().astype(np.uint8)
skimage.io.imsave("tests/fixtures/face_rgb_128.png", rgb)

g = 0.299 * a[..., 0] + 0.587 * a[..., 1] + 0.114 * a[..., 2]
big = resize(g, (256, 256), anti_aliasing=True).round().clip(0, 255).astype(np.uint8)
small = resize(g, (192, 192), anti_aliasing=True).round().clip(0, 255).astype(np.uint8)
comp = np.full((256, 448), 128, np.uint8)
comp[:, :256] = big
comp[32:224, 256:448] = small
skimage.io.imsave("tests/fixtures/two_faces_gray.png", comp)
