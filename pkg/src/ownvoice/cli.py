"""Command-line interface: ``ownvoice <command> [options]``.

Commands: identify, simulate, evaluate, experiment, cluster-labels,
inspect-model.  Exit status is 0 on success, 1 on validation errors and
2 on I/O errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial, reduce
from pathlib import Path

import numpy as np

from .dataset import ENCODINGS, Manifest, ManifestEntry, load_manifest, read_wav, write_manifest, write_wav
from .errors import ConfigError, ManifestError, OwnVoiceError, PairingError, ValidationError
from .labels import FrameLabels, cluster_pseudo_phonemes, frames_to_segments, load_segments, segments_to_frames, write_segments
from .metrics import lsd, summarize
from .rtf import RtfAccumulator, RtfModel, accumulate, finalize_speech_dependent, load_model, merge, save_model
from .simulate import SimulationConfig, apply_prediction_delay, simulate_inear
from .stft import AudioClip, StftConfig, analyze

log = logging.getLogger("ownvoice")

CONDITIONS = ("same_talker", "talker_mismatch")
MODES = ("dependent", "independent")


# -- helpers -----------------------------------------------------------------

def _pmap(fn, items, jobs: int) -> list:
    """Ordered map, optionally over a process pool."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def _stft_config(args) -> StftConfig:
    hop = args.hop if args.hop is not None else args.frame_len // 2
    return StftConfig(args.frame_len, hop, float(args.sample_rate))


def _load_labels(entry: ManifestEntry, cfg: StftConfig, num_frames: int, num_classes: int) -> FrameLabels | None:
    if entry.labels_path is None:
        return None
    segments = load_segments(entry.labels_path, num_classes)
    return segments_to_frames(segments, cfg, num_frames, num_classes)


def _crop(clip: AudioClip, seconds: float | None) -> AudioClip:
    if seconds is None:
        return clip
    n = int(round(seconds * clip.sample_rate_hz))
    return clip if n >= len(clip) else AudioClip(clip.samples[:n], clip.sample_rate_hz)


def _read_pair(entry: ManifestEntry, delay: int, crop_s: float | None = None) -> tuple[AudioClip, AudioClip]:
    """Outer clip and the delayed in-ear clip of one utterance."""
    if entry.inear_path is None:
        raise ManifestError(f"utterance {entry.utterance_id!r} has no inear_path")
    outer = _crop(read_wav(entry.outer_path), crop_s)
    inear = _crop(read_wav(entry.inear_path), crop_s)
    if len(outer) != len(inear):
        raise PairingError(
            f"utterance {entry.utterance_id!r}: outer has {len(outer)} samples, "
            f"in-ear {len(inear)}"
        )
    return outer, apply_prediction_delay(inear, delay)


def _utterance_accumulator(entry: ManifestEntry, cfg: StftConfig, num_classes: int, delay: int) -> RtfAccumulator:
    outer, inear = _read_pair(entry, delay)
    Yo, Yi = analyze(outer, cfg), analyze(inear, cfg)
    labels = _load_labels(entry, cfg, Yo.num_frames, num_classes)
    return accumulate(RtfAccumulator.empty(cfg, num_classes, delay), Yo, Yi, labels)


def _safe_name(name: str) -> str:
    if not name or "/" in name or "\\" in name or name in (".", ".."):
        raise ValidationError(f"{name!r} cannot be used as a file name")
    return name


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_summary(path: Path, groups: dict[str, list[float]]) -> None:
    keys = ("count", "mean", "std", "min", "q1", "median", "q3", "max")
    rows = []
    for name, values in groups.items():
        s = summarize(values)
        rows.append([name] + [s.get(k, "") for k in keys])
    _write_csv(path, ("group",) + keys, rows)


# -- identify ----------------------------------------------------------------

def identify_models(
    manifest: Manifest,
    cfg: StftConfig,
    num_classes: int,
    delay: int,
    eps: float | None = None,
    min_frames: int = 5,
    jobs: int = 1,
) -> dict[str, RtfModel]:
    """One model per talker, estimated over all of that talker's utterances.

    Accumulators are reduced in manifest order, so the result does not
    depend on `jobs`.
    """
    for e in manifest:
        if e.inear_path is None:
            raise ManifestError(f"utterance {e.utterance_id!r} has no inear_path; cannot identify")
    worker = partial(_utterance_accumulator, cfg=cfg, num_classes=num_classes, delay=delay)
    accs = _pmap(worker, manifest.entries, jobs)
    models = {}
    for talker, entries in manifest.by_talker().items():
        ids = {e.utterance_id for e in entries}
        acc = reduce(
            merge,
            (a for e, a in zip(manifest.entries, accs) if e.utterance_id in ids),
            RtfAccumulator.empty(cfg, num_classes, delay),
        )
        models[talker] = finalize_speech_dependent(acc, eps, min_frames, talker_id=talker)
    return models


def cmd_identify(args) -> int:
    cfg = _stft_config(args)
    manifest = load_manifest(args.manifest, cfg.sample_rate_hz)
    models = identify_models(
        manifest, cfg, args.num_classes, args.delay, args.eps, args.min_frames, args.jobs
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for talker, model in models.items():
        path = out / f"{_safe_name(talker)}.json"
        save_model(model, path)
        log.info(
            "talker %s: %d frames, %d/%d phoneme RTFs -> %s",
            talker, model.global_frames, len(model.per_phoneme), model.num_classes, path,
        )
    return 0


# -- simulate ----------------------------------------------------------------

@dataclass(frozen=True)
class _SimJob:
    entry: ManifestEntry
    model_path: Path
    mode: str
    compensate: bool
    out_path: Path | None
    encoding: str
    crop_s: float | None = None


def _simulate_one(job: _SimJob, model: RtfModel | None = None) -> dict:
    model = model or load_model(job.model_path)
    outer = _crop(read_wav(job.entry.outer_path), job.crop_s)
    labels = None
    if job.mode == "dependent" and job.entry.labels_path is not None:
        L = model.cfg.num_frames(len(outer))
        labels = _load_labels(job.entry, model.cfg, L, model.num_classes)
    sim_cfg = SimulationConfig.for_model(model, job.compensate)
    mode = job.mode
    notes: tuple[str, ...] = ()
    if mode == "dependent" and labels is None:
        notes = ("no phoneme labels; falling back to speech-independent filtering",)
        mode = "independent"
    result = simulate_inear(outer, labels, model, sim_cfg, mode)
    if job.out_path is not None:
        write_wav(result.clip, job.out_path, job.encoding)
    return {
        "utterance_id": job.entry.utterance_id,
        "talker_id": job.entry.talker_id,
        "model_talker": model.talker_id,
        "mode": result.mode,
        "frames": result.num_frames,
        "fallback_frames": result.fallback_frames,
        "warning": "; ".join(notes + result.warnings),
        "clip": result.clip if job.out_path is None else None,
    }


SIM_REPORT_COLUMNS = ("utterance_id", "talker_id", "model_talker", "mode", "frames", "fallback_frames", "warning")


def cmd_simulate(args) -> int:
    cfg = _stft_config(args)
    manifest = load_manifest(args.manifest, cfg.sample_rate_hz)
    model = load_model(args.model)
    if model.cfg.sample_rate_hz != cfg.sample_rate_hz:
        raise ConfigError(
            f"model sample rate {model.cfg.sample_rate_hz} Hz differs from --sample-rate {cfg.sample_rate_hz}"
        )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [
        _SimJob(e, Path(args.model), args.mode, args.compensate_delay, out / f"{_safe_name(e.utterance_id)}.wav", args.encoding)
        for e in manifest
    ]
    rows = _pmap(_simulate_one, jobs, args.jobs)
    for r in rows:
        if r["warning"]:
            log.warning("%s: %s", r["utterance_id"], r["warning"])
    _write_csv(out / "simulation_report.csv", SIM_REPORT_COLUMNS, [[r[c] for c in SIM_REPORT_COLUMNS] for r in rows])
    return 0


# -- evaluate ----------------------------------------------------------------

def _lsd_pair(real_inear: AudioClip, simulated: AudioClip, cfg: StftConfig, delay: int, floor: float):
    """LSD on the delayed in-ear timeline, over the common length."""
    real = apply_prediction_delay(real_inear, delay)
    n = min(len(real), len(simulated))
    a = AudioClip(real.samples[:n], real.sample_rate_hz)
    b = AudioClip(simulated.samples[:n], simulated.sample_rate_hz)
    return lsd(analyze(a, cfg), analyze(b, cfg), floor)


EVAL_COLUMNS = ("utterance_id", "talker_id", "lsd_db", "frames")


def cmd_evaluate(args) -> int:
    cfg = _stft_config(args)
    manifest = load_manifest(args.manifest, cfg.sample_rate_hz)
    sim_dir = Path(args.sim_dir)
    floor = 10.0 ** (args.floor_db / 20.0)
    rows = []
    for e in manifest:
        sim_path = sim_dir / f"{_safe_name(e.utterance_id)}.wav"
        if e.inear_path is None:
            raise ManifestError(f"utterance {e.utterance_id!r} has no real in-ear recording to compare against")
        if not sim_path.is_file():
            raise ManifestError(f"utterance {e.utterance_id!r}: simulated file {sim_path} is missing")
        sim = read_wav(sim_path)
        if sim.sample_rate_hz != cfg.sample_rate_hz:
            raise ConfigError(f"{sim_path}: sample rate {sim.sample_rate_hz} Hz, expected {cfg.sample_rate_hz}")
        res = _lsd_pair(read_wav(e.inear_path), sim, cfg, args.delay, floor)
        rows.append([e.utterance_id, e.talker_id, _fmt(res.utterance_lsd_db), res.frames_used])
    report = Path(args.report) if args.report else sim_dir / "lsd_report.csv"
    _write_csv(report, EVAL_COLUMNS, rows)
    _write_summary(report.with_name(report.stem + "_summary.csv"), {"all": [float(r[2]) for r in rows]})
    return 0


# -- experiment --------------------------------------------------------------

def make_plan(manifest: Manifest, condition: str, seed: int) -> dict[str, str]:
    """Map each utterance to the talker whose model simulates it.

    Under ``talker_mismatch`` the model talker is drawn uniformly from the
    other talkers with a generator seeded by `seed`, in manifest order.
    """
    if condition == "same_talker":
        return {e.utterance_id: e.talker_id for e in manifest}
    if condition != "talker_mismatch":
        raise ConfigError(f"unknown condition {condition!r}")
    talkers = sorted(manifest.talkers)
    if len(talkers) < 2:
        raise ValidationError("talker_mismatch needs at least two talkers")
    rng = np.random.default_rng(seed)
    plan = {}
    for e in manifest:
        others = [t for t in talkers if t != e.talker_id]
        plan[e.utterance_id] = others[int(rng.integers(len(others)))]
    return plan


def run_condition(
    manifest: Manifest,
    models: dict[str, RtfModel],
    plan: dict[str, str],
    modes=MODES,
    floor: float = 1e-8,
    crop_s: float | None = None,
) -> dict[str, list[dict]]:
    """Simulate and score every utterance under `plan` for each mode."""
    results = {m: [] for m in modes}
    for e in manifest:
        model = models[plan[e.utterance_id]]
        _, real_inear = _read_pair(e, 0, crop_s)
        for mode in modes:
            job = _SimJob(e, Path(), mode, False, None, "float32", crop_s)
            r = _simulate_one(job, model)
            res = _lsd_pair(real_inear, r["clip"], model.cfg, model.delay_samples, floor)
            r.update(lsd_db=res.utterance_lsd_db)
            del r["clip"]
            results[mode].append(r)
    return results


EXPERIMENT_COLUMNS = ("utterance_id", "talker_id", "model_talker", "mode", "lsd_db", "frames", "fallback_frames", "warning")


def cmd_experiment(args) -> int:
    cfg = _stft_config(args)
    manifest = load_manifest(args.manifest, cfg.sample_rate_hz)
    models_dir = Path(args.models_dir)
    models = {}
    for t in manifest.talkers:
        models[t] = load_model(models_dir / f"{_safe_name(t)}.json")
    conditions = CONDITIONS if args.condition == "both" else (args.condition,)
    modes = MODES if args.mode == "both" else (args.mode,)
    out = Path(args.out_dir)
    floor = 10.0 ** (args.floor_db / 20.0)
    for condition in conditions:
        plan = make_plan(manifest, condition, args.seed)
        cdir = out / condition
        cdir.mkdir(parents=True, exist_ok=True)
        _write_csv(cdir / "assignments.csv", ("utterance_id", "talker_id", "model_talker"),
                   [[e.utterance_id, e.talker_id, plan[e.utterance_id]] for e in manifest])
        results = run_condition(manifest, models, plan, modes, floor, args.crop_seconds)
        for mode, rows in results.items():
            _write_csv(cdir / f"lsd_{mode}.csv", EXPERIMENT_COLUMNS,
                       [[_fmt(r[c]) if c == "lsd_db" else r[c] for c in EXPERIMENT_COLUMNS] for r in rows])
        _write_summary(cdir / "summary.csv", {m: [r["lsd_db"] for r in rows] for m, rows in results.items()})
        for mode, rows in results.items():
            log.info("%s / %s: mean LSD %.3f dB over %d utterances",
                     condition, mode, float(np.mean([r["lsd_db"] for r in rows])), len(rows))
    return 0


# -- cluster-labels ----------------------------------------------------------

def _cluster_one(entry: ManifestEntry, cfg: StftConfig, num_classes: int, seed: int, out_dir: Path) -> Path:
    outer = read_wav(entry.outer_path)
    labels = cluster_pseudo_phonemes(analyze(outer, cfg), num_classes, seed)
    path = out_dir / f"{_safe_name(entry.utterance_id)}.csv"
    write_segments(frames_to_segments(labels, cfg, len(outer)), path)
    return path


def cmd_cluster_labels(args) -> int:
    cfg = _stft_config(args)
    manifest = load_manifest(args.manifest, cfg.sample_rate_hz)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    worker = partial(_cluster_one, cfg=cfg, num_classes=args.num_classes, seed=args.seed, out_dir=out)
    paths = _pmap(worker, manifest.entries, args.jobs)
    labeled = Manifest(
        tuple(replace(e, labels_path=p) for e, p in zip(manifest.entries, paths)),
        manifest.sample_rate_hz,
        out,
    )
    write_manifest(labeled, out / "manifest.csv")
    return 0


# -- inspect-model -----------------------------------------------------------

def cmd_inspect_model(args) -> int:
    model = load_model(args.model)
    freqs = model.cfg.bin_frequencies()
    g_db = 20.0 * np.log10(np.abs(model.global_rtf) + 1e-12)
    info = {
        "talker_id": model.talker_id,
        "frame_len": model.cfg.frame_len,
        "hop": model.cfg.hop,
        "sample_rate_hz": model.cfg.sample_rate_hz,
        "delay_samples": model.delay_samples,
        "num_classes": model.num_classes,
        "eps": model.eps,
        "min_frames": model.min_frames,
        "global_frames": model.global_frames,
        "phoneme_rtfs": len(model.per_phoneme),
        "fallback_classes": [c for c in range(model.num_classes) if c not in model.per_phoneme],
        "frame_counts": {str(c): int(n) for c, n in enumerate(model.frame_counts) if n},
        "global_rtf_peak_db": float(g_db.max()),
        "global_rtf_peak_hz": float(freqs[int(np.argmax(g_db))]),
    }
    print(json.dumps(info, indent=2))
    if args.rtf_csv:
        header = ["freq_hz", "global_re", "global_im"]
        cols = [freqs, model.global_rtf.real, model.global_rtf.imag]
        for c, h in sorted(model.per_phoneme.items()):
            header += [f"p{c}_re", f"p{c}_im"]
            cols += [h.real, h.imag]
        _write_csv(Path(args.rtf_csv), header, [[_fmt(v) for v in row] for row in zip(*cols)])
    return 0


# -- argument parsing --------------------------------------------------------

def _common_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("analysis")
    g.add_argument("--sample-rate", type=float, default=5000.0, help="working sample rate in Hz (default 5000)")
    g.add_argument("--frame-len", type=int, default=256, help="STFT frame length K (default 256)")
    g.add_argument("--hop", type=int, default=None, help="frame shift; must be K/2 (default K/2)")
    g.add_argument("--delay", type=int, default=11, help="prediction delay applied to in-ear signals (default 11)")
    g.add_argument("--eps", type=float, default=None, help="absolute RTF regularizer (default 1e-10 x mean power)")
    g.add_argument("--min-frames", type=int, default=5, help="frames needed for a per-phoneme RTF (default 5)")
    g.add_argument("--num-classes", type=int, default=62, help="number of phoneme classes P (default 62)")
    g.add_argument("--floor-db", type=float, default=-160.0, help="LSD magnitude floor in dB (default -160)")
    g.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    g.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="ownvoice", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identify", parents=[common], help="estimate one model per talker")
    p.add_argument("manifest")
    p.add_argument("out_dir")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("simulate", parents=[common], help="simulate in-ear signals with one model")
    p.add_argument("manifest")
    p.add_argument("model")
    p.add_argument("out_dir")
    p.add_argument("--mode", choices=MODES, default="dependent")
    p.add_argument("--compensate-delay", action="store_true", help="drop the first --delay samples of the output")
    p.add_argument("--encoding", choices=sorted(ENCODINGS), default="float32")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", parents=[common], help="LSD between real and simulated in-ear signals")
    p.add_argument("manifest")
    p.add_argument("sim_dir")
    p.add_argument("--report", default=None, help="report CSV (default SIM_DIR/lsd_report.csv)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", parents=[common], help="same-talker / talker-mismatch evaluation")
    p.add_argument("manifest")
    p.add_argument("models_dir")
    p.add_argument("out_dir")
    p.add_argument("--condition", choices=CONDITIONS + ("both",), default="both")
    p.add_argument("--mode", choices=MODES + ("both",), default="both")
    p.add_argument("--crop-seconds", type=float, default=None, help="use only the first N seconds of each utterance")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("cluster-labels", parents=[common], help="pseudo-phoneme labels by k-means")
    p.add_argument("manifest")
    p.add_argument("out_dir")
    p.set_defaults(func=cmd_cluster_labels)

    p = sub.add_parser("inspect-model", parents=[common], help="summarize a model file")
    p.add_argument("model")
    p.add_argument("--rtf-csv", default=None, help="also dump all RTFs to this CSV")
    p.set_defaults(func=cmd_inspect_model)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        format="%(levelname)s %(name)s: %(message)s",
        level=logging.INFO if args.verbose else logging.WARNING,
    )
    try:
        return args.func(args)
    except (ValidationError, ValueError) as exc:
        log.error("%s", exc)
        return 1
    except (OSError, OwnVoiceError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
