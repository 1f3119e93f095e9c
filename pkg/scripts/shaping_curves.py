"""Emit the shaping gain curves and shaped-tail envelopes as CSV.

python scripts/shaping_curves.py --out-dir curves/
produces decay.csv, attenuation.csv and shaped_tails.csv, plus PNGs when
matplotlib is importable.
"""

import argparse
from pathlib import Path

import numpy as np

from rirshape import ShapingParams, Strategy, attenuation_function, decay_function


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="curves")
    parser.add_argument("--rt60", type=float, default=1.0,
                        help="room decay time for the shaped-tail plot")
    parser.add_argument("--duration", type=float, default=0.45)
    parser.add_argument("--step", type=float, default=0.0005)
    parser.add_argument("--plot", action="store_true", help="also render PNGs")
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = ShapingParams(Strategy.ATTENUATED_DECAYED)
    t = np.arange(int(args.duration / args.step) + 1) * args.step

    decay = decay_function(t, params)
    attenuation = attenuation_function(t, params)
    envelope = 10.0 ** (-3.0 * t / args.rt60)
    tails = {
        "none": envelope,
        "decayed": envelope * decay,
        "attenuated_decayed": envelope * decay * attenuation,
    }

    _write_csv(out / "decay.csv", {"t_s": t, "D": decay})
    _write_csv(out / "attenuation.csv", {"t_s": t, "A": attenuation})
    _write_csv(out / "shaped_tails.csv", {"t_s": t, **tails})
    print(f"wrote CSVs to {out}/")

    if args.plot:
        try:
            import matplotlib
            matplotlib.use("Agg")
            import matplotlib.pyplot as plt
        except ImportError:
            print("matplotlib not available; skipping PNGs")
            return
        fig, (top, bottom) = plt.subplots(2, 1, figsize=(7, 7))
        top.plot(t * 1000, decay, label="decay (rd=200 ms)")
        top.plot(t * 1000, attenuation, label="attenuation (alpha=0.4)")
        top.set_xlabel("time (ms)"), top.set_ylabel("gain"), top.legend()
        top.set_xlim(0, 100)
        for name, tail in tails.items():
            bottom.plot(t * 1000, 20 * np.log10(np.maximum(tail, 1e-8)), label=name)
        bottom.set_xlabel("time (ms)"), bottom.set_ylabel("envelope (dB)")
        bottom.legend(), bottom.set_ylim(-80, 5)
        fig.tight_layout()
        fig.savefig(out / "curves.png", dpi=120)
        print(f"wrote {out / 'curves.png'}")


def _write_csv(path, columns):
    names = list(columns)
    rows = zip(*(np.asarray(columns[n]) for n in names))
    lines = [",".join(names)]
    lines += [",".join(format(v, ".9g") for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
