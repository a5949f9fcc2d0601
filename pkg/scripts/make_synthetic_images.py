"""Write the synthetic test images (PGM) used by the desk-scale experiments."""

import argparse
from pathlib import Path

from ficsthresh import synthetic
from ficsthresh.imaging import save_image

IMAGES = {
    "bimodal": synthetic.bimodal,
    "trimodal": synthetic.trimodal,
    "fivemode": synthetic.five_mode,
    "skewed": lambda: synthetic.gaussian_mixture([40, 95, 150, 210], [20, 8, 25, 6], [0.4, 0.1, 0.35, 0.15]),
    "sixmode": lambda: synthetic.gaussian_mixture([20, 60, 100, 140, 180, 220], 10),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data", help="output directory")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, make in IMAGES.items():
        img = synthetic.image_from_histogram(make(), width=400)
        save_image(img, out / f"{name}.pgm")
        print(f"{out / name}.pgm  {img.width}x{img.height}")


if __name__ == "__main__":
    main()
