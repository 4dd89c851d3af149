"""Command-line surface.

Exit codes: 0 ok, 2 validation failure, 3 I/O failure, 4 numeric failure.
Outputs never overwrite existing files unless --force is given; every
subcommand is deterministic for a fixed seed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

from . import abx, metrics
from .brir import (Brir, DS_SUFFIX, METHOD_MODEL_DIR, METHOD_OMNI_DIR,
                   METHOD_SRC_DIR, compensate_direct, detect_direct_onset,
                   extract_direct, synthesize_brir)
from .directivity import load_directivity_db
from .dsp import ImpulseResponse, read_wav, write_wav
from .exceptions import NumericError
from .loudness import TARGET_LUFS_DEFAULT
from .room import load_scene, scene_to_dict, validate_scene
from .session import StimulusPackage, load_conditions_file, package_session

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

_METHOD_BY_FLAG = {
    "src-dir": METHOD_SRC_DIR,
    "model-dir": METHOD_MODEL_DIR,
    "omni-dir": METHOD_OMNI_DIR,
}


def _guard_overwrite(paths, force: bool) -> None:
    existing = [str(p) for p in paths if Path(p).exists()]
    if existing and not force:
        raise FileExistsError(
            "refusing to overwrite " + ", ".join(existing)
            + " (pass --force to allow)")


def _config_hash(doc: dict) -> str:
    return hashlib.sha256(
        json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


def _cmd_simulate(args) -> int:
    scene = load_scene(args.scene)
    if args.seed is not None:
        scene.seed = args.seed
    problems = validate_scene(scene)
    if problems:
        raise ValueError("invalid scene: " + "; ".join(problems))

    method = _METHOD_BY_FLAG[args.method]
    scene_dir = Path(args.scene).parent
    receiver_ref = scene.receiver.hrir_db_ref
    if args.hrir_db:
        receiver_ref = args.hrir_db
    if not receiver_ref:
        raise ValueError("no HRIR database given (scene hrir_db_ref or --hrir-db)")
    hrir_db = load_directivity_db(_resolve(receiver_ref, scene_dir))

    source_db = None
    src_cfg = scene.sources[args.source_index]
    source_ref = args.source_db or src_cfg.directivity_db_ref
    if method == METHOD_SRC_DIR:
        if not source_ref:
            raise ValueError("src-dir requires a source directivity database "
                             "(scene directivity_db_ref or --source-db)")
        source_db = load_directivity_db(_resolve(source_ref, scene_dir))

    brir = synthesize_brir(scene, method=method, hrir_db=hrir_db,
                           source_db=source_db,
                           source_index=args.source_index)

    if args.ds:
        if not args.reference:
            raise ValueError("--ds requires --reference with a measured BRIR")
        reference = read_wav(args.reference)
        onset = min(detect_direct_onset(reference.samples[0]),
                    detect_direct_onset(reference.samples[1]))
        meas_direct = extract_direct(reference, onset)
        brir = compensate_direct(brir, meas_direct)

    out = Path(args.out)
    stem_paths = {name: out.with_name(out.stem + f".{name}.wav")
                  for name in brir.parts}
    sidecar = out.with_suffix(".json")
    _guard_overwrite([out, sidecar, *stem_paths.values()], args.force)

    out.parent.mkdir(parents=True, exist_ok=True)
    write_wav(out, brir.ir)
    for name, path in stem_paths.items():
        write_wav(path, brir.parts[name])
    scene_doc = scene_to_dict(scene)
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump({
            "method": brir.method,
            "source_id": brir.source_id,
            "seed": scene.seed,
            "config_hash": _config_hash({"scene": scene_doc,
                                         "method": brir.method}),
            "sample_rate": brir.ir.sample_rate,
            "stems": {n: p.name for n, p in stem_paths.items()},
        }, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out} ({brir.method}, {brir.ir.n_samples} samples)")
    return EXIT_OK


def _resolve(ref: str, base: Path) -> Path:
    p = Path(ref)
    return p if p.is_absolute() else base / p


def _cmd_analyze(args) -> int:
    reports = []
    for wav in args.brirs:
        ir = read_wav(wav)
        report = metrics.compute_report(ir, method=Path(wav).stem)
        reports.append(report)
        print(metrics.format_report_table(report))
        print()
    if args.out:
        _guard_overwrite([args.out], args.force)
        metrics.write_report_csv(args.out, reports)
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    ref = metrics.compute_report(read_wav(args.reference), method="reference")
    candidates = {}
    for wav in args.candidates:
        name = Path(wav).stem
        candidates[name] = metrics.compute_report(read_wav(wav), method=name)
    ranking = metrics.rank_methods(ref, candidates)
    rows = [{"rank": i + 1, "method": name, "score": f"{score:.6f}",
             "cells_used": cells}
            for i, (name, score, cells) in enumerate(ranking)]
    for row in rows:
        print(f"{row['rank']:>3}  {row['method']:<24} {row['score']}"
              f"  ({row['cells_used']} cells)")
    if args.out:
        _guard_overwrite([args.out], args.force)
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["rank", "method", "score", "cells_used"])
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_package_abx(args) -> int:
    conditions = load_conditions_file(args.conditions)
    token_paths = sorted(Path(args.tokens).glob("*.wav"))
    tokens = [read_wav(p) for p in token_paths]
    package = StimulusPackage(
        conditions=conditions, tokens=tokens,
        target_lufs=args.target_lufs, seed=args.seed,
        trials_per_condition=args.trials)
    out = Path(args.out)
    _guard_overwrite([out / "plan.json"], args.force)
    plan = package_session(out, package)
    print(f"wrote session with {len(plan['trials'])} trials to {out}")
    return EXIT_OK


def _cmd_abx_analyze(args) -> int:
    keys_path = Path(args.keys)
    if not keys_path.exists():
        raise FileNotFoundError(
            f"hidden-key file {keys_path} not found; refusing to analyze "
            "without it")
    with open(args.plan, "r", encoding="utf-8") as fh:
        plan = json.load(fh)
    with open(keys_path, "r", encoding="utf-8") as fh:
        keys = json.load(fh)
    with open(args.log, "r", encoding="utf-8") as fh:
        records = abx.parse_response_log(fh)
    analyses = abx.analyze_log(records, plan, keys)
    rows = abx.analysis_rows(analyses)
    for row in rows:
        print(f"{row['subject']:<12}{row['condition']:<20}"
              f"{row['n_correct']:>3}/{row['n_trials']:<3}"
              f"  d'={row['d_prime']:>8}  p={row['p_value']}"
              f"  {'finished' if row['finished'] else 'open'}")
    if args.out:
        _guard_overwrite([args.out], args.force)
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys())
                                    if rows else ["subject", "condition"])
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brirlab",
        description="Binaural room impulse response simulation and evaluation")
    parser.add_argument("--verbose", "-v", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate",
                         help="render a BRIR (composite + stems) for a scene")
    sim.add_argument("--scene", required=True, help="scene JSON file")
    sim.add_argument("--method", required=True, choices=sorted(_METHOD_BY_FLAG))
    sim.add_argument("--out", required=True, help="output WAV path")
    sim.add_argument("--ds", action="store_true",
                     help="apply direct-sound compensation")
    sim.add_argument("--reference",
                     help="measured BRIR WAV for --ds compensation")
    sim.add_argument("--hrir-db", help="receiver database manifest")
    sim.add_argument("--source-db", help="source directivity manifest")
    sim.add_argument("--source-index", type=int, default=0)
    sim.add_argument("--seed", type=int, default=None,
                     help="override the scene's seed")
    sim.add_argument("--force", action="store_true")
    sim.set_defaults(func=_cmd_simulate)

    ana = sub.add_parser("analyze", help="room-acoustic metrics of BRIR WAVs")
    ana.add_argument("brirs", nargs="+")
    ana.add_argument("--out", help="metrics CSV path")
    ana.add_argument("--force", action="store_true")
    ana.set_defaults(func=_cmd_analyze)

    cmp_ = sub.add_parser("compare",
                          help="rank candidate BRIRs against a reference")
    cmp_.add_argument("reference")
    cmp_.add_argument("candidates", nargs="+")
    cmp_.add_argument("--out", help="ranking CSV path")
    cmp_.add_argument("--force", action="store_true")
    cmp_.set_defaults(func=_cmd_compare)

    pkg = sub.add_parser("package-abx",
                         help="render a randomized ABX session directory")
    pkg.add_argument("--conditions", required=True,
                     help="conditions JSON file")
    pkg.add_argument("--tokens", required=True,
                     help="directory of dry mono WAV tokens")
    pkg.add_argument("--out", required=True, help="session directory")
    pkg.add_argument("--seed", type=int, default=0)
    pkg.add_argument("--trials", type=int, default=abx.TRIAL_CAP_DEFAULT)
    pkg.add_argument("--target-lufs", type=float,
                     default=TARGET_LUFS_DEFAULT)
    pkg.add_argument("--force", action="store_true")
    pkg.set_defaults(func=_cmd_package_abx)

    aba = sub.add_parser("abx-analyze",
                         help="score a response log against a session")
    aba.add_argument("--log", required=True)
    aba.add_argument("--plan", required=True)
    aba.add_argument("--keys", required=True)
    aba.add_argument("--out", help="results CSV path")
    aba.add_argument("--force", action="store_true")
    aba.set_defaults(func=_cmd_abx_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FileNotFoundError, FileExistsError, OSError) as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
