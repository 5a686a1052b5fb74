"""Command-line entry point: ``mixclust <subcommand> ...``.

Exit codes: 0 success, 2 invalid input or configuration, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import PipelineConfig, load_config
from .corpus import SyntheticCorpus, WavDirectoryCorpus
from .errors import (ConfigError, InfeasibleSceneError, InvalidInputError, MixclustError,
                     TrainingDivergedError)

log = logging.getLogger("mixclust")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3
THREADS_ENV = "MIXCLUST_THREADS"


def resolve_threads(flag: int | None) -> int:
    if flag is not None:
        value = flag
    else:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV}={raw!r} is not an integer") from None
    if value < 1:
        raise ConfigError("thread count must be >= 1")
    return value


def _base_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    return cfg.override(seed=getattr(args, "seed", None))


def _corpus(cfg: PipelineConfig):
    c = cfg.corpus
    if c.source == "synthetic":
        return SyntheticCorpus(c.n_speakers_per_gender, seed=cfg.seed)
    return WavDirectoryCorpus(c.source, cfg.stft.sample_rate)


def _data_dir(cfg: PipelineConfig, flag) -> Path:
    return Path(flag) if flag else Path(cfg.output_dir) / "data"


# -- gen ---------------------------------------------------------------------
def cmd_gen(args) -> int:
    from .dataset import generate_dataset
    cfg = _base_config(args)
    counts = dict(cfg.dataset.counts)
    for split in ("train", "eval", "test"):
        if getattr(args, split) is not None:
            counts[split] = getattr(args, split)
    cfg = cfg.override("dataset", n_sources=args.n_sources, gender_group=args.genders,
                       clip_seconds=args.clip_seconds, counts=counts)
    cfg = cfg.override("corpus", source=args.corpus, n_speakers_per_gender=args.speakers_per_gender)
    out = _data_dir(cfg, args.out)
    manifest = generate_dataset(_corpus(cfg), cfg.dataset, out, seed=cfg.seed, geom=cfg.geometry,
                                threads=args.threads, fmt=args.format)
    print(f"wrote {len(manifest.entries)} mixtures and {out / 'manifest.jsonl'}")
    return EXIT_OK


# -- inspect -----------------------------------------------------------------
def _find_entry(wav: Path, manifest_flag):
    from .dataset import MANIFEST_NAME, load_manifest
    candidates = [Path(manifest_flag)] if manifest_flag else [
        wav.parent / MANIFEST_NAME, wav.parent.parent / MANIFEST_NAME]
    for cand in candidates:
        if cand.is_file() or (manifest_flag and cand.is_dir()):
            manifest = load_manifest(cand)
            for e in manifest.entries:
                if manifest.resolve(e.mixture_path).resolve() == wav.resolve():
                    return manifest, e
    if manifest_flag:
        raise ConfigError(f"{wav} is not listed in {manifest_flag}")
    return None, None


def cmd_inspect(args) -> int:
    from .dsp import stft
    from .features import normalized_phase_difference, npd_histogram
    from .masks import bpd_mask, dominant_source_mask, write_mask
    from .plotting import plot_histogram
    from .seeding import substream
    from .wavio import read_wav
    cfg = _base_config(args)
    wav = Path(args.mixture)
    x, _ = read_wav(wav, expected_rate=cfg.stft.sample_rate)
    if x.ndim != 2:
        raise InvalidInputError(f"{wav} is mono; phase differences need two channels")
    manifest, entry = _find_entry(wav, args.manifest)
    m1, m2 = stft(x[:, 0], cfg.stft), stft(x[:, 1], cfg.stft)
    npd = normalized_phase_difference(m1, m2, cfg.train.silence_floor)
    hist = npd_histogram(npd, args.bins)
    name = entry.id if entry else wav.name.split(".")[0]
    out = Path(args.out) if args.out else wav.parent
    csv_path = hist.to_csv(out / f"{name}.npd_hist.csv")
    plot_histogram(hist, out / f"{name}.npd_hist.png", title=name)
    centres = 0.5 * (hist.edges[:-1] + hist.edges[1:])
    peaks = [float(centres[p]) for p in hist.peaks()]
    summary = {"mixture": str(wav), "histogram_csv": str(csv_path),
               "peaks_us": [round(p * 1e6, 3) for p in peaks], "valid_bins": int(npd.valid.sum())}
    if entry is not None:
        n = entry.n_sources
        bpd = bpd_mask(npd, n, substream(cfg.seed, f"kmeans/{entry.id}"),
                       max_delay=cfg.geometry.max_delay)
        write_mask(out / f"{name}.bpd.mask", bpd)
        summary["planted_delays_us"] = entry.delays_us
        if entry.source_paths:
            refs = manifest.load_references(entry, cfg.stft.sample_rate)
            ds = dominant_source_mask([stft(r, cfg.stft) for r in refs])
            energy = np.abs(m1.bins) ** 2
            summary["bpd_ds_agreement"] = round(100 * bpd.agreement(ds), 2)
            summary["bpd_ds_agreement_energy_weighted"] = round(
                100 * bpd.agreement(ds, weights=energy), 2)
    print(json.dumps(summary, indent=1))
    return EXIT_OK


# -- train -------------------------------------------------------------------
def cmd_train(args) -> int:
    from .dataset import load_manifest
    from .model import load_checkpoint, save_checkpoint, train
    from .model.checkpoint import write_loss_history
    from .plotting import plot_loss
    cfg = _base_config(args)
    cfg = cfg.override("train", target_kind=args.target, epochs=args.epochs,
                       learning_rate=args.lr)
    cfg = cfg.override("network", hidden=args.hidden, embed_dim=args.embed_dim,
                       n_layers=args.layers, cell=args.cell, dropout=args.dropout)
    manifest = load_manifest(_data_dir(cfg, args.data))
    out = Path(args.out) if args.out else Path(cfg.output_dir) / f"{cfg.train.target_kind}.ckpt"
    resume = load_checkpoint(args.resume) if args.resume else None
    if resume is not None and resume.target_kind != cfg.train.target_kind:
        raise ConfigError(f"checkpoint was trained on {resume.target_kind} targets, "
                          f"not {cfg.train.target_kind}")

    def on_epoch(epoch, ckpt):
        save_checkpoint(out, ckpt)
        log.info("epoch %d: loss %.5f", epoch, ckpt.loss_history[-1])

    try:
        ckpt = train(manifest, cfg.train_config(), cfg.network, cfg.stft, cfg.geometry,
                     resume=resume, on_epoch=on_epoch)
    except TrainingDivergedError as exc:
        if exc.checkpoint is not None:
            save_checkpoint(out, exc.checkpoint)
            write_loss_history(out.with_suffix(".loss.csv"), exc.checkpoint.loss_history)
        print(f"training diverged: {exc}; last good checkpoint kept at {out}", file=sys.stderr)
        return EXIT_RUNTIME
    save_checkpoint(out, ckpt)
    write_loss_history(out.with_suffix(".loss.csv"), ckpt.loss_history)
    if ckpt.loss_history:
        plot_loss(ckpt.loss_history, out.with_suffix(".loss.png"))
    print(f"wrote {out} after {ckpt.epochs_done} epochs")
    return EXIT_OK


# -- separate ----------------------------------------------------------------
def cmd_separate(args) -> int:
    from .model import load_checkpoint
    from .seeding import substream
    from .separation import Separator, write_sources
    from .wavio import read_wav
    cfg = _base_config(args)
    sep = Separator(load_checkpoint(args.checkpoint))
    wav = Path(args.mixture)
    x, rate = read_wav(wav)
    if x.ndim == 2:
        if args.channel is None:
            raise InvalidInputError(f"{wav} is stereo; pick a channel with --channel")
        if args.channel >= x.shape[1]:
            raise InvalidInputError(f"{wav} has no channel {args.channel}")
        x = x[:, args.channel]
    mixture_id = wav.name.split(".")[0]
    result = sep.separate(x, rate, args.n_sources, substream(cfg.seed, f"kmeans/{mixture_id}"))
    out = Path(args.out) if args.out else wav.parent
    for p in write_sources(result, out, mixture_id, rate):
        print(p)
    return EXIT_OK


# -- eval --------------------------------------------------------------------
def _render_report_figures(csv_path: Path) -> list:
    from .evaluation import SdrReport, write_boxplot_data
    from .plotting import plot_sdr_boxes
    reports = SdrReport.from_csv(csv_path)
    box_path = write_boxplot_data(csv_path.with_suffix(".boxplot.json"), reports)
    box = json.loads(box_path.read_text())
    figs = [plot_sdr_boxes(box, csv_path.with_suffix(".improvement.png")),
            plot_sdr_boxes(box, csv_path.with_suffix(".sdr.png"), key="sdr")]
    return [box_path] + figs


def cmd_eval(args) -> int:
    from .dataset import load_manifest
    from .evaluation import evaluate
    from .model import load_checkpoint
    cfg = _base_config(args)
    manifest = load_manifest(_data_dir(cfg, args.data))
    jobs = [(m, None) for m in args.method]
    jobs += [("checkpoint", load_checkpoint(p)) for p in args.checkpoint]
    if not jobs:
        raise ConfigError("nothing to evaluate: give --method and/or --checkpoint")
    out = Path(args.out) if args.out else Path(cfg.output_dir) / "eval"
    csv_path = out / "sdr.csv"
    summaries = {}
    for i, (method, ckpt) in enumerate(jobs):
        report = evaluate(method, manifest, args.n_sources, ckpt, args.split, cfg.seed,
                          cfg.stft, cfg.geometry, args.threads, args.limit)
        report.to_csv(csv_path, append=i > 0)
        summaries[report.method] = report.summary()
        s = summaries[report.method]["all"]
        print(f"{report.method:12s} median SDR {s['sdr']['median']:7.2f} dB  "
              f"median improvement {s['improvement']['median']:7.2f} dB  "
              f"(IQR {s['improvement']['iqr']:.2f}, n={s['sdr']['n']})")
    (out / "summary.json").write_text(json.dumps(summaries, indent=1))
    _render_report_figures(csv_path)
    print(f"wrote {csv_path}")
    return EXIT_OK


# -- plot-data ---------------------------------------------------------------
def cmd_plot_data(args) -> int:
    from .features import Histogram
    from .plotting import plot_histogram, plot_loss
    src = Path(args.csv)
    if not src.is_file():
        raise InvalidInputError(f"no such file: {src}")
    with open(src, newline="") as fh:
        header = next(csv.reader(fh), [])
    if header[:2] == ["mixture_id", "method"]:
        written = _render_report_figures(src)
    elif header == ["bin_left_seconds", "bin_right_seconds", "count"]:
        written = [plot_histogram(Histogram.from_csv(src), src.with_suffix(".png"))]
    elif header == ["epoch", "mean_loss"]:
        with open(src, newline="") as fh:
            history = [float(r["mean_loss"]) for r in csv.DictReader(fh)]
        written = [plot_loss(history, src.with_suffix(".png"))]
    else:
        raise InvalidInputError(f"{src}: unrecognised CSV header {header}")
    for p in written:
        print(p)
    return EXIT_OK


# -- argument parsing --------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixclust", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="YAML pipeline config (flags override it)")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default: ${THREADS_ENV} or 1)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a spatialised mixture dataset")
    g.add_argument("--out", help="dataset directory (default <output_dir>/data)")
    g.add_argument("--n-sources", type=int)
    g.add_argument("--genders", choices=["f", "m", "fm"])
    g.add_argument("--train", type=int)
    g.add_argument("--eval", type=int)
    g.add_argument("--test", type=int)
    g.add_argument("--clip-seconds", type=float)
    g.add_argument("--corpus", help="'synthetic' or a directory of <speaker>/*.wav")
    g.add_argument("--speakers-per-gender", type=int, help="synthetic corpus size")
    g.add_argument("--format", choices=["float32", "pcm16"], default="float32")
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_gen)

    i = sub.add_parser("inspect", help="NPD histogram and BPD/DS mask agreement for one clip")
    i.add_argument("mixture", help="stereo mixture WAV")
    i.add_argument("--manifest", help="manifest listing the clip (searched for by default)")
    i.add_argument("--bins", type=int, default=60)
    i.add_argument("--out", help="output directory (default: next to the WAV)")
    i.add_argument("--seed", type=int)
    i.set_defaults(func=cmd_inspect)

    t = sub.add_parser("train", help="train an embedding network")
    t.add_argument("--data", help="dataset directory (default <output_dir>/data)")
    t.add_argument("--target", choices=["DS", "BPD", "RPD"])
    t.add_argument("--epochs", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--hidden", type=int)
    t.add_argument("--embed-dim", type=int)
    t.add_argument("--layers", type=int)
    t.add_argument("--cell", choices=["gru", "lstm"])
    t.add_argument("--dropout", type=float)
    t.add_argument("--out", help="checkpoint path (default <output_dir>/<target>.ckpt)")
    t.add_argument("--resume", help="continue from this checkpoint")
    t.add_argument("--seed", type=int)
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("separate", help="separate a single-channel mixture")
    s.add_argument("checkpoint")
    s.add_argument("mixture")
    s.add_argument("-n", "--n-sources", type=int, default=2)
    s.add_argument("--channel", type=int, help="channel to use when the WAV is stereo")
    s.add_argument("--out", help="output directory (default: next to the input)")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_separate)

    e = sub.add_parser("eval", help="SDR report for checkpoints and oracle masks")
    e.add_argument("--data", help="dataset directory (default <output_dir>/data)")
    e.add_argument("--method", action="append", default=[],
                   choices=["oracle-DS", "oracle-BPD", "initial"])
    e.add_argument("--checkpoint", action="append", default=[])
    e.add_argument("-n", "--n-sources", type=int, help="clusters per mixture (default: true count)")
    e.add_argument("--split", default="test")
    e.add_argument("--limit", type=int)
    e.add_argument("--out", help="report directory (default <output_dir>/eval)")
    e.add_argument("--seed", type=int)
    e.set_defaults(func=cmd_eval)

    d = sub.add_parser("plot-data", help="render figures from an SDR, histogram or loss CSV")
    d.add_argument("csv")
    d.set_defaults(func=cmd_plot_data)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.threads = resolve_threads(args.threads)
        return args.func(args)
    except (ConfigError, InvalidInputError, InfeasibleSceneError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except MixclustError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except FloatingPointError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
