"""Regenerate the tiny two-class image fixture under fixtures/tiny/.

Class 0 sets are 8-bit gray PGM stripes, class 1 sets are RGB PNG checkers;
each set holds five 12x12 images with seeded noise.
"""
import json
from pathlib import Path

import numpy as np
from PIL import Image

ROOT = Path(__file__).resolve().parents[1] / "fixtures" / "tiny"


def stripes(rng, phase):
    x = np.arange(12)
    base = 128 + 90 * np.sin((x + phase) * np.pi / 3)
    img = np.tile(base, (12, 1)) + rng.normal(0, 12, (12, 12))
    return np.clip(img, 0, 255).astype(np.uint8)


def checker(rng, shift):
    yy, xx = np.mgrid[:12, :12]
    mask = ((yy + shift) // 3 + xx // 3) % 2
    rgb = np.stack([200 * mask + 30, 60 + 100 * (1 - mask), 120 * np.ones_like(mask)], axis=-1)
    rgb = rgb + rng.normal(0, 10, rgb.shape)
    return np.clip(rgb, 0, 255).astype(np.uint8)


def main():
    rng = np.random.default_rng(2024)
    classes = []
    for class_id, (maker, suffix) in enumerate([(stripes, ".pgm"), (checker, ".png")]):
        sets = []
        for set_id in ("a", "b"):
            folder = ROOT / f"class{class_id}" / set_id
            folder.mkdir(parents=True, exist_ok=True)
            names = []
            for k in range(5):
                name = f"{k:03d}{suffix}"
                Image.fromarray(maker(rng, k)).save(folder / name)
                names.append(f"class{class_id}/{set_id}/{name}")
            # one set per class is listed file by file, the other by directory
            source = names if set_id == "a" else f"class{class_id}/{set_id}"
            sets.append({"set_id": set_id, "images": source})
        classes.append({"class_id": class_id, "sets": sets})
    manifest = {"name": "tiny", "preprocessing": {"resize": [20, 20], "grayscale": True}, "classes": classes}
    (ROOT / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
