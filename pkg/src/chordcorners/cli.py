"""Batch command line: detect, synth, transform, evaluate, sweep.

Exit codes: 0 on success, 1 when some items failed (diagnostics.txt written
next to the outputs), 2 when required input could not be read at all.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .config import DETECTOR_CHOICES, FORMAT_CHOICES, RunConfig
from .detector import CornerSet, detect_corners
from .errors import ChordCornersError, InputError
from .evaluation import run_experiment, write_report
from .image import load_image, write_pgm
from .synth import SynthFixture, default_corpus
from .transforms import FAMILIES, generate_dataset, read_manifest


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with run settings; flags override it")
    common.add_argument("--detector", choices=DETECTOR_CHOICES, default=None)
    common.add_argument("--chord", type=int, default=None,
                        help="chord length for the single-chord detector")
    common.add_argument("--curvature-threshold", type=float, default=None)
    common.add_argument("--angle-threshold", type=float, default=None)
    common.add_argument("--seed", type=int, default=None, help="seed for noise transforms")
    common.add_argument("--jobs", type=int, default=None, help="worker processes")
    common.add_argument("--smoke", action="store_true", default=None,
                        help="one transform per family instead of the full grid")
    common.add_argument("--format", choices=FORMAT_CHOICES, default=None, dest="out_format")

    parser = argparse.ArgumentParser(prog="chordcorners",
                                     description="Chord-accumulation corner detection toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", parents=[common], help="detect corners in images")
    p.add_argument("images", nargs="+", help="input images (PGM natively; others need Pillow)")
    p.add_argument("--out", default=".", help="directory for corner files")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("synth", parents=[common], help="write the synthetic fixture corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=256, help="canvas side in pixels")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("transform", parents=[common], help="render the transformed dataset")
    p.add_argument("--bases", required=True, help="directory of base .pgm images")
    p.add_argument("--out", required=True)
    p.add_argument("--families", default=None, help=f"comma list from {','.join(FAMILIES)}")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("evaluate", parents=[common], help="score detectors over a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="directory for the report files")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", parents=[common],
                       help="synth + transform + evaluate in one run")
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--families", default=None, help=f"comma list from {','.join(FAMILIES)}")
    p.set_defaults(func=cmd_sweep)
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if getattr(args, "config", None) else RunConfig()
    families = getattr(args, "families", None)
    return cfg.merged(
        detector=getattr(args, "detector", None),
        chord=getattr(args, "chord", None),
        curvature_threshold=getattr(args, "curvature_threshold", None),
        angle_threshold=getattr(args, "angle_threshold", None),
        seed=getattr(args, "seed", None),
        jobs=getattr(args, "jobs", None),
        smoke=getattr(args, "smoke", None),
        out_format=getattr(args, "out_format", None),
        families=tuple(families.split(",")) if families else None,
    )


def _write_corners(path: Path, image_id: str, detector: str, corners: CornerSet,
                   out_format: str) -> None:
    if out_format == "json":
        payload = {
            "image_id": image_id,
            "detector": detector,
            "corners": [
                {"x": round(c.x, 4), "y": round(c.y, 4), "curvature": round(c.curvature, 6),
                 "curve_id": c.curve_id, "t_junction": c.is_t_junction}
                for c in corners.corners
            ],
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y", "curvature", "curve_id", "t_junction"])
        for c in corners.corners:
            writer.writerow([f"{c.x:.4f}", f"{c.y:.4f}", f"{c.curvature:.6f}",
                             c.curve_id, int(c.is_t_junction)])


def cmd_detect(cfg: RunConfig, args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    detectors = cfg.detectors()
    pipeline = cfg.pipeline()
    failures: list[str] = []
    processed = 0
    for name in args.images:
        path = Path(name)
        try:
            img = load_image(path)
        except Exception as exc:
            failures.append(f"{path}: {exc}")
            continue
        lines = []
        for det, params in detectors.items():
            try:
                corners, _ = detect_corners(img, params, pipeline, image_id=path.stem)
            except Exception as exc:
                failures.append(f"{path} [{det}]: {exc}")
                continue
            _write_corners(out / f"{path.stem}.{det}.corners.{cfg.out_format}",
                           path.stem, det, corners, cfg.out_format)
            lines.append(f"{det}={len(corners.corners)}")
        processed += 1
        print(f"{path}: {' '.join(lines)}")
    if failures:
        (out / "diagnostics.txt").write_text("\n".join(failures) + "\n")
        return 2 if processed == 0 else 1
    return 0


def _write_corpus(corpus: list[SynthFixture], out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for fx in corpus:
        write_pgm(fx.image, out / f"{fx.fixture_id}.pgm")
    with open(out / "ground_truth.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["fixture_id", "shape_kind", "corner_index", "x", "y", "angle_deg"])
        for fx in corpus:
            for i, (pos, angle) in enumerate(zip(fx.true_corners, fx.corner_angles)):
                writer.writerow([fx.fixture_id, fx.shape_kind, i,
                                 f"{pos[0]:.4f}", f"{pos[1]:.4f}", f"{angle:.4f}"])


def cmd_synth(cfg: RunConfig, args: argparse.Namespace) -> int:
    corpus = default_corpus(args.size)
    _write_corpus(corpus, Path(args.out))
    n_corners = sum(len(fx.true_corners) for fx in corpus)
    print(f"wrote {len(corpus)} fixtures ({n_corners} true corners) under {args.out}")
    return 0


def cmd_transform(cfg: RunConfig, args: argparse.Namespace) -> int:
    base_paths = sorted(Path(args.bases).glob("*.pgm"))
    if not base_paths:
        raise InputError(f"no .pgm images under {args.bases}")
    bases = [(p.stem, p) for p in base_paths]
    rows = generate_dataset(bases, args.out, families=cfg.families or FAMILIES,
                            seed=cfg.seed, smoke=cfg.smoke)
    print(f"wrote {len(rows)} transformed images and manifest.csv under {args.out}")
    return 0


def _report(cfg: RunConfig, rows, out_dir: Path) -> int:
    result = run_experiment(rows, cfg.detectors(), cfg.pipeline(),
                            jobs=cfg.jobs, match_radius=cfg.match_radius)
    write_report(out_dir, result)
    for det in sorted(result.counters):
        stats = result.summary["detectors"][det]
        rep = stats["average_repeatability"]
        loc = stats["localization_error"]
        print(f"{det}: repeatability={rep:.2f}% loc_error={loc:.4f}px "
              f"corners(orig)={stats['corners_original_total']}"
              if rep is not None and loc is not None
              else f"{det}: no measurable items")
    if result.failures:
        (out_dir / "diagnostics.txt").write_text("\n".join(result.failures) + "\n")
        print(f"{len(result.failures)} item(s) failed; see diagnostics.txt", file=sys.stderr)
        return 1
    return 0


def cmd_evaluate(cfg: RunConfig, args: argparse.Namespace) -> int:
    rows = read_manifest(args.manifest)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return _report(cfg, rows, out)


def cmd_sweep(cfg: RunConfig, args: argparse.Namespace) -> int:
    out = Path(args.out)
    fixtures_dir = out / "fixtures"
    corpus = default_corpus(args.size)
    _write_corpus(corpus, fixtures_dir)
    bases = [(fx.fixture_id, fixtures_dir / f"{fx.fixture_id}.pgm") for fx in corpus]
    rows = generate_dataset(bases, out / "dataset", families=cfg.families or FAMILIES,
                            seed=cfg.seed, smoke=cfg.smoke)
    print(f"dataset: {len(rows)} transformed images")
    report_dir = out / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    return _report(cfg, rows, report_dir)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        return args.func(cfg, args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ChordCornersError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
