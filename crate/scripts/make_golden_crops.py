"""Regenerates the golden crop images used by the core test suite.

The expected crops are computed here with plain numpy slicing and integer
block averaging, independently of the Rust resampler.

    python3 scripts/make_golden_crops.py
"""
from pathlib import Path

import numpy as np
from PIL import Image

OUT = Path(__file__).resolve().parent.parent / "crates/core/tests/fixtures/golden"


def source() -> np.ndarray:
    y, x = np.mgrid[0:224, 0:224]
    r = (x * 7 + y * 13) % 256
    g = (x * y) % 256
    b = (x ^ y) % 256
    return np.stack([r, g, b], axis=-1).astype(np.uint8)


def window(img: np.ndarray, cx: int, cy: int, side: int) -> np.ndarray:
    """Square [c - side//2, c - side//2 + side) with zero padding."""
    h, w, _ = img.shape
    out = np.zeros((side, side, 3), dtype=np.uint8)
    x0, y0 = cx - side // 2, cy - side // 2
    for yy in range(side):
        for xx in range(side):
            sx, sy = x0 + xx, y0 + yy
            if 0 <= sx < w and 0 <= sy < h:
                out[yy, xx] = img[sy, sx]
    return out


def halve(img: np.ndarray) -> np.ndarray:
    a = img.astype(np.uint32)
    s = a[0::2, 0::2] + a[1::2, 0::2] + a[0::2, 1::2] + a[1::2, 1::2]
    return ((s + 2) // 4).astype(np.uint8)


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    src = source()
    Image.fromarray(src).save(OUT / "source.png")
    # center (112, 112), side 112, output 112: plain cut-out
    Image.fromarray(window(src, 112, 112, 112)).save(OUT / "centered.png")
    # center (0, 0), side 20, output 20: three zero quadrants
    Image.fromarray(window(src, 0, 0, 20)).save(OUT / "corner.png")
    # center (112, 112), side 224, output 112: whole frame halved
    Image.fromarray(halve(window(src, 112, 112, 224))).save(OUT / "downsample.png")


if __name__ == "__main__":
    main()
