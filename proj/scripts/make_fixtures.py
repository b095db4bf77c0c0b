#!/usr/bin/env python3
"""Builds tests/data/natural from photos bundled with scikit-image, scikit-learn
and matplotlib. Every image is resized so its longer side is at most 320 px
and written as 8-bit PNG (grayscale sources stay grayscale)."""
import argparse
import os

import numpy as np
from PIL import Image

SKIMAGE = [
    "astronaut.png", "coffee.png", "chelsea.png", "camera.png", "moon.png",
    "brick.png", "grass.png", "gravel.png", "motorcycle_left.png",
    "motorcycle_right.png", "rocket.jpg", "retina.jpg", "hubble_deep_field.jpg",
    "coins.png", "ihc.png", "cell.png", "clock_motion.png",
]


def sources():
    import matplotlib
    import skimage
    import sklearn.datasets
    sk = os.path.join(os.path.dirname(skimage.__file__), "data")
    for name in SKIMAGE:
        yield os.path.join(sk, name)
    skl = os.path.join(os.path.dirname(sklearn.datasets.__file__), "images")
    yield os.path.join(skl, "china.jpg")
    yield os.path.join(skl, "flower.jpg")
    yield os.path.join(os.path.dirname(matplotlib.__file__), "mpl-data",
                       "sample_data", "grace_hopper.jpg")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..",
                                                  "tests", "data", "natural"))
    ap.add_argument("--max-side", type=int, default=320)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for path in sources():
        im = Image.open(path)
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        scale = args.max_side / max(im.size)
        if scale < 1:
            im = im.resize((round(im.width * scale), round(im.height * scale)),
                           Image.LANCZOS)
        stem = os.path.splitext(os.path.basename(path))[0]
        im.save(os.path.join(args.out, stem + ".png"), optimize=True)
        print(stem, im.size, im.mode)


if __name__ == "__main__":
    main()
