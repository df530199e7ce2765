"""Command line entry point.

    mowave run <config> [--scale F] [--out DIR] [--seed S]
                        [--indicator I1|I2|both] [--generator bie|approx]
    mowave presets
    mowave render <image.csv> [--out PNG] [--pixels N]

``run`` accepts a JSON config path, a bare preset name, or a finished
run's metadata.json (reproducing that run).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import MowaveError
from .imaging import load_image
from .presets import preset_names
from .render import render_heatmap
from .runner import apply_scale, parse_config, run_experiment

_INDICATOR_CHOICES = {
    "I1": ["I1"],
    "I2": ["I2tilde"],
    "both": ["I1", "I2tilde"],
}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mowave",
        description="Moving-emitter scattering simulation and direct "
                    "sampling reconstruction.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment end to end")
    run.add_argument("config",
                     help="config JSON path, preset name, or metadata.json")
    run.add_argument("--scale", type=float, metavar="F",
                     help="multiply time steps, mesh resolution, and "
                          "receiver count by F")
    run.add_argument("--out", metavar="DIR", help="output directory")
    run.add_argument("--seed", type=int, metavar="S", help="noise seed")
    run.add_argument("--indicator", choices=sorted(_INDICATOR_CHOICES),
                     help="override which indicators are computed")
    run.add_argument("--generator", choices=["bie", "approx"],
                     help="override the data generator")

    sub.add_parser("presets", help="list built-in experiment presets")

    rend = sub.add_parser("render", help="re-render a heatmap from an "
                                         "image CSV")
    rend.add_argument("image", help="indicator image CSV path")
    rend.add_argument("--out", metavar="PNG",
                      help="output path (default: alongside the CSV)")
    rend.add_argument("--pixels", type=int, default=1, metavar="N",
                      help="pixels per grid cell (default 1)")
    return p


def _load_document(target: str) -> dict:
    path = Path(target)
    if path.exists():
        return json.loads(path.read_text())
    if target in preset_names():
        return {"preset": target}
    raise MowaveError(
        f"{target!r} is neither a config file nor a preset name; "
        f"`mowave presets` lists the built-ins"
    )


def _cmd_run(args: argparse.Namespace) -> int:
    doc = _load_document(args.config)
    if "outputs" in doc and "config" in doc:
        doc = doc["config"]
    if args.seed is not None:
        doc.setdefault("noise", {})["seed"] = args.seed
    if args.indicator is not None:
        doc["indicators"] = _INDICATOR_CHOICES[args.indicator]
    if args.generator is not None:
        doc["generator"] = args.generator
    if args.out is not None:
        doc["output_dir"] = args.out

    cfg = parse_config(doc)
    if args.scale is not None:
        cfg = apply_scale(cfg, args.scale)
    result = run_experiment(cfg)

    print(f"run complete: {cfg.name}")
    for label, path in [("record", result.record_path),
                        *result.image_paths.items(),
                        *result.heatmap_paths.items(),
                        ("metadata", result.metadata_path)]:
        print(f"  {label:8s} {path}")
    total = sum(result.timings.values())
    stages = ", ".join(f"{k} {v:.1f}s" for k, v in result.timings.items())
    print(f"  elapsed {total:.1f}s ({stages})")
    return 0


def _cmd_presets() -> int:
    for name in preset_names():
        print(name)
    return 0


def _cmd_render(args: argparse.Namespace) -> int:
    img = load_image(args.image)
    out = Path(args.out) if args.out else Path(args.image).with_suffix(".png")
    render_heatmap(img, out, scale=args.pixels)
    print(out)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "presets":
            return _cmd_presets()
        return _cmd_render(args)
    except MowaveError as exc:
        print(f"mowave: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
