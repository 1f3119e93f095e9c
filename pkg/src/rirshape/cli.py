"""Command-line interface.

Subcommands: shape, synth-rir, analyze-rir, gains, make-dataset,
verify, plot-data. Flag defaults are the standard shaping constants
(t0 20 ms, t1 30 ms, rd 200 ms, alpha 0.4), so bare invocations
reproduce the stock configurations. Errors print one machine-parseable
``error: ...`` line on stderr and exit nonzero. A ``--config`` file
(key=value lines, keys named after long flags with dashes as
underscores) supplies defaults that explicit flags override;
RIRSHAPE_OUT_DIR sets the fallback output directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import acoustics, bands, dsp, kvtext, pipeline, shaping, wavio
from .errors import ParameterError, RirshapeError

ENV_OUT_DIR = "RIRSHAPE_OUT_DIR"


def _out_path(explicit, default_name: str) -> Path:
    if explicit is not None:
        return Path(explicit)
    return Path(os.environ.get(ENV_OUT_DIR, ".")) / default_name


def _require(args, *names) -> None:
    for name in names:
        if getattr(args, name.replace("-", "_")) is None:
            raise ParameterError(f"--{name} is required (flag or config)")


def _shaping_params(args) -> shaping.ShapingParams:
    _require(args, "strategy")
    kwargs = {}
    if args.t0 is not None:
        kwargs["t0"] = args.t0
    if args.t1 is not None:
        kwargs["t1"] = args.t1
    if args.rd is not None:
        kwargs["rd"] = args.rd
    return shaping.ShapingParams(shaping.Strategy(args.strategy),
                                 alpha=args.alpha, **kwargs)


def _add_shaping_flags(parser, with_strategy=True):
    if with_strategy:
        parser.add_argument("--strategy", default=None,
                            choices=[s.value for s in shaping.Strategy])
    parser.add_argument("--t0", type=float, default=None,
                        help="early/late boundary in seconds (default 0.020)")
    parser.add_argument("--t1", type=float, default=None,
                        help="end of the attenuation transition in seconds (default 0.030)")
    parser.add_argument("--alpha", type=float, default=None,
                        help="late-tail amplitude factor (default per strategy)")
    parser.add_argument("--rd", type=float, default=None,
                        help="60 dB decay time of the decay curve in seconds (default 0.200)")


def cmd_shape(args) -> int:
    rir = shaping.read_rir(args.rir)
    params = _shaping_params(args)
    shaped = shaping.shape_rir(rir, params)
    out = _out_path(args.out, Path(args.rir).stem + ".shaped.wav")
    metadata = dict(params.as_dict(), source=str(args.rir), seed=args.seed)
    shaping.write_rir(shaped, out, metadata=metadata, encoding=args.encoding)
    print(f"wrote {out}")
    return 0


def cmd_synth_rir(args) -> int:
    _require(args, "rt60")
    seed = args.seed if args.seed is not None else 0
    rir = shaping.synth_rir(args.rt60, length=args.length, n_early=args.n_early,
                            seed=seed, sample_rate=args.sample_rate,
                            tail_level=args.tail_level)
    out = _out_path(args.out, f"rir_rt60_{args.rt60:g}_seed{seed}.wav")
    shaping.write_rir(rir, out, metadata={"nominal_rt60": args.rt60, "seed": seed,
                                          "n_early": args.n_early},
                      encoding=args.encoding)
    print(f"wrote {out}")
    return 0


def cmd_analyze_rir(args) -> int:
    rir = shaping.read_rir(args.rir)
    record = {"file": args.rir, "taps": len(rir), "sample_rate": rir.sample_rate,
              "direct_index": rir.direct_index,
              "drr_db": acoustics.drr(rir, args.boundary),
              "drr_boundary": args.boundary}
    try:
        record["rt60_estimate"] = acoustics.estimate_rt60(rir)
    except RirshapeError as exc:
        record["rt60_estimate"] = "undefined"
        record["rt60_error"] = str(exc)
    sys.stdout.write(kvtext.dump_kv(record))
    if args.edc_csv:
        curve = acoustics.energy_decay_curve(rir)
        lines = ["t_s,level_db"]
        lines += [f"{t:.9g},{lvl:.9g}" for t, lvl in zip(curve.times, curve.levels)]
        Path(args.edc_csv).write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {args.edc_csv}")
    return 0


def cmd_verify(args) -> int:
    h0 = shaping.read_rir(args.rir)
    params = _shaping_params(args)
    h1 = shaping.shape_rir(h0, params)
    report = acoustics.verify_shaping(h0, h1, params)
    sys.stdout.write(report.to_kv())
    if args.csv:
        path = Path(args.csv)
        new = not path.exists()
        with open(path, "a", encoding="utf-8") as fh:
            if new:
                fh.write(report.CSV_HEADER + "\n")
            fh.write(report.to_csv_row() + "\n")
    return 0


def cmd_gains(args) -> int:
    _require(args, "input", "target")
    noisy = wavio.read_wav(args.input)
    target = wavio.read_wav(args.target)
    if len(noisy) != len(target):
        raise ParameterError("input and target must be equally long")
    noisy_spectra = dsp.analyze(noisy)
    target_spectra = dsp.analyze(target)
    fb = bands.design_erb_filterbank(noisy_spectra.fft_size, noisy.sample_rate)
    gains = bands.ideal_gains(bands.band_energies(target_spectra, fb),
                              bands.band_energies(noisy_spectra, fb))
    suffix = ".gains.f32" if args.binary else ".gains.csv"
    out = _out_path(args.out, Path(args.input).stem + suffix)
    if args.binary:
        bands.write_band_matrix_raw(gains, out, noisy.sample_rate,
                                    noisy_spectra.frame_advance_ms)
    else:
        bands.write_band_matrix_csv(gains, out, fb)
    print(f"wrote {out}")
    if args.apply_out:
        filtered = bands.apply_gains(noisy_spectra, gains, fb, mode=args.mode)
        wavio.write_wav(dsp.synthesize(filtered), args.apply_out)
        print(f"wrote {args.apply_out}")
    return 0


def cmd_make_dataset(args) -> int:
    manifest = pipeline.load_manifest(args.manifest)
    if args.seed is not None:
        manifest.seed = args.seed
    out_dir = _out_path(args.out_dir, "dataset")
    summary = pipeline.build_dataset(manifest, out_dir, workers=args.workers)
    sys.stdout.write(summary.to_kv())
    for failure in summary.failures():
        print(f"error: entry {failure.entry_id}: {failure.reason}", file=sys.stderr)
    return 0 if summary.n_failed == 0 else 1


def cmd_plot_data(args) -> int:
    params = shaping.ShapingParams(
        shaping.Strategy.ATTENUATED_DECAYED,
        t0=args.t0 if args.t0 is not None else shaping.DEFAULT_T0,
        t1=args.t1 if args.t1 is not None else shaping.DEFAULT_T1,
        alpha=args.alpha,
        rd=args.rd if args.rd is not None else shaping.DEFAULT_RD)
    if args.duration is not None:
        duration = args.duration
    elif args.function == "A":
        duration = params.t1 + 0.020
    elif args.function == "D":
        duration = params.t0 + 2.0 * params.rd
    else:
        duration = 0.4
    t = np.arange(int(round(duration / args.step)) + 1) * args.step

    if args.function == "D":
        header, columns = "t_s,D", [shaping.decay_function(t, params)]
    elif args.function == "A":
        header, columns = "t_s,A", [shaping.attenuation_function(t, params)]
    else:
        envelope = 10.0 ** (-3.0 * t / args.rt60)
        decay = shaping.decay_function(t, params)
        attenuation = shaping.attenuation_function(t, params)
        header = "t_s,none,decayed,attenuated_decayed"
        columns = [envelope, envelope * decay, envelope * decay * attenuation]

    out = _out_path(args.out, f"curve_{args.function.replace('-', '_')}.csv")
    lines = [header]
    for i in range(t.size):
        row = [t[i]] + [col[i] for col in columns]
        lines.append(",".join(format(v, ".9g") for v in row))
    Path(out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="seed for any randomized work in this command")
    common.add_argument("--config", default=None,
                        help="key=value file of flag defaults")

    parser = argparse.ArgumentParser(
        prog="rirshape",
        description="Shape room impulse responses and build dereverberation "
                    "training data.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shape", parents=[common],
                       help="apply a shaping strategy to an impulse response")
    p.add_argument("rir", help="input RIR (mono WAV)")
    _add_shaping_flags(p)
    p.add_argument("--out", default=None)
    p.add_argument("--encoding", default="float32", choices=wavio.ENCODINGS)
    p.set_defaults(func=cmd_shape)

    p = sub.add_parser("synth-rir", parents=[common],
                       help="synthesize a stochastic impulse response")
    p.add_argument("--rt60", type=float, default=None)
    p.add_argument("--length", type=float, default=None)
    p.add_argument("--n-early", type=int, default=6)
    p.add_argument("--sample-rate", type=int, default=dsp.DEFAULT_SAMPLE_RATE)
    p.add_argument("--tail-level", type=float, default=0.05)
    p.add_argument("--out", default=None)
    p.add_argument("--encoding", default="float32", choices=wavio.ENCODINGS)
    p.set_defaults(func=cmd_synth_rir)

    p = sub.add_parser("analyze-rir", parents=[common],
                       help="measure RT60 and DRR of an impulse response")
    p.add_argument("rir")
    p.add_argument("--boundary", type=float, default=shaping.DEFAULT_T1)
    p.add_argument("--edc-csv", default=None,
                   help="also write the energy decay curve as CSV")
    p.set_defaults(func=cmd_analyze_rir)

    p = sub.add_parser("verify", parents=[common],
                       help="shape an RIR and check the measured effect "
                            "against prediction")
    p.add_argument("rir")
    _add_shaping_flags(p)
    p.add_argument("--csv", default=None, help="append the report to a CSV file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gains", parents=[common],
                       help="compute ideal band gains for an input/target pair")
    p.add_argument("--input", default=None, help="noisy-reverberant WAV")
    p.add_argument("--target", default=None, help="target WAV (same length)")
    p.add_argument("--out", default=None)
    p.add_argument("--binary", action="store_true",
                   help="write raw float32 + sidecar instead of CSV")
    p.add_argument("--mode", default="triangular", choices=bands.APPLY_MODES)
    p.add_argument("--apply-out", default=None,
                   help="also apply the gains and write the filtered WAV here")
    p.set_defaults(func=cmd_gains)

    p = sub.add_parser("make-dataset", parents=[common],
                       help="generate training examples from a manifest")
    p.add_argument("manifest")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_make_dataset)

    p = sub.add_parser("plot-data", parents=[common],
                       help="emit CSV curves of the shaping functions")
    p.add_argument("function", choices=["D", "A", "shaped-tail"])
    _add_shaping_flags(p, with_strategy=False)
    p.add_argument("--rt60", type=float, default=1.0,
                   help="room decay time for the shaped-tail envelope")
    p.add_argument("--duration", type=float, default=None)
    p.add_argument("--step", type=float, default=0.001)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_plot_data)

    return parser


def _subparser_for(parser: argparse.ArgumentParser, command: str):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise RuntimeError("parser has no subcommands")


def _apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    """Fill args still at their parser default from the --config file."""
    if not getattr(args, "config", None):
        return
    record = kvtext.load_kv(args.config)
    actions = {a.dest: a for a in _subparser_for(parser, args.command)._actions}
    for key, raw in record.items():
        dest = key.replace("-", "_")
        action = actions.get(dest)
        if action is None:
            raise ParameterError(f"config key {key!r} matches no flag of this command")
        if getattr(args, dest) != action.default:
            continue  # explicit flag wins
        if action.type is not None:
            value = action.type(raw)
        elif isinstance(action.default, bool):
            value = raw.lower() in ("1", "true", "yes")
        else:
            value = raw
        setattr(args, dest, value)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(parser, args)
        return args.func(args)
    except (RirshapeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
