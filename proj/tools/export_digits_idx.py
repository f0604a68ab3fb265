#!/usr/bin/env python3
"""Export scikit-learn's bundled 8x8 handwritten-digits set as an IDX pair.

Writes <out>/digits-images-idx3-ubyte and <out>/digits-labels-idx1-ubyte in
the classic big-endian IDX format (magic 0x803 / 0x801). Pixel intensities
(0..16) are rescaled to 0..255. The repository ships the generated pair under
data/; rerun this script only to regenerate them.
"""

import struct
import sys
from pathlib import Path

from sklearn.datasets import load_digits


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data")
    out.mkdir(parents=True, exist_ok=True)

    digits = load_digits()
    images = digits.images  # (n, 8, 8), values 0..16
    labels = digits.target

    n, rows, cols = images.shape
    with open(out / "digits-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, n, rows, cols))
        scaled = (images / 16.0 * 255.0).round().clip(0, 255).astype("uint8")
        f.write(scaled.tobytes())
    with open(out / "digits-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(labels.astype("uint8").tobytes())
    print(f"wrote {n} images ({rows}x{cols}) to {out}")


if __name__ == "__main__":
    main()
