"""Command-line interface: ``mtmceval evaluate`` and ``mtmceval synth``.

Exit codes: 0 success, 1 invalid input (bad flags, parse or validation
errors), 2 I/O or internal errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ValidationError
from .formats import load_homographies, parse_detections, write_detections, write_homographies, write_mapping
from .geometry import GROUND, IOU, Overlap
from .idmeasures import match_truth_to_result
from .model import Camera, build_scenario
from .report import MEASURES, build_report, dumps, format_text
from .synth import PRESETS, RandomParams, make_preset, random_scenario

log = logging.getLogger("mtmceval")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INTERNAL = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # bad flags are input errors (exit 1), not argparse's default 2
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _measures(text: str) -> list[str]:
    names = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in names if m not in MEASURES]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"measures must be a comma list of {','.join(MEASURES)}")
    return names


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mtmceval", description="Multi-camera tracking evaluation.")
    parser.add_argument("--version", action="version", version=f"mtmceval {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ev = sub.add_parser("evaluate", help="score a tracker output against ground truth")
    ev.add_argument("--gt", required=True, help="ground-truth detection CSV")
    ev.add_argument("--res", required=True, help="tracker-output detection CSV")
    ev.add_argument("--mode", choices=(IOU, GROUND), default=IOU)
    ev.add_argument("--delta", type=float, default=None, help="overlap threshold (default 0.5 iou, 1.0 ground)")
    ev.add_argument("--measures", type=_measures, default=list(MEASURES), help="comma list of id,clear,mcta")
    ev.add_argument("--per-camera", action="store_true", help="add one row per camera")
    ev.add_argument("--diagnostics", action="store_true", help="handover difficulty and handover cases")
    ev.add_argument("--homographies", help="directory of camera<k>.txt image-to-ground homographies")
    ev.add_argument("--json", help="write the JSON report here ('-' for stdout)")
    ev.add_argument("--text", help="write the text table here ('-' for stdout)")
    ev.add_argument("--mapping", help="write truth-to-result pairs as CSV")
    ev.add_argument("--mota-mismatches", choices=("phi", "mu"), default="phi")

    sy = sub.add_parser("synth", help="write a synthetic gt.csv / res.csv pair")
    sy.add_argument("--preset", required=True, choices=(*PRESETS, "random"))
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--out", required=True, help="output directory")
    d = RandomParams()
    sy.add_argument("--cameras", type=int, default=d.cameras)
    sy.add_argument("--identities", type=int, default=d.identities)
    sy.add_argument("--frames", type=int, default=d.frames)
    sy.add_argument("--mean-length", type=float, default=d.mean_length)
    sy.add_argument("--overlap", type=float, default=d.overlap, help="field-of-view overlap fraction in [0, 1]")
    for name in ("fragment", "merge", "flip", "drop"):
        sy.add_argument(f"--{name}-rate", type=float, default=getattr(d, f"{name}_rate"))
    sy.add_argument("--spurious-rate", type=float, default=d.spurious_rate, help="mean spurious tracks per camera")
    sy.add_argument("--jitter", type=float, default=d.jitter, help="position noise in meters")
    return parser


def _emit(text: str, target: str) -> None:
    if target == "-":
        sys.stdout.write(text)
    else:
        Path(target).write_text(text, encoding="utf-8")


def cmd_evaluate(args) -> int:
    overlap = Overlap.parse(args.mode, args.delta)
    truth = parse_detections(args.gt)
    computed = parse_detections(args.res)
    log.info("parsed %d truth and %d computed rows", len(truth), len(computed))
    seen = np.union1d(truth.camera, computed.camera).tolist()
    homographies = load_homographies(args.homographies) if args.homographies else {}
    cameras = {int(c): homographies.get(int(c), Camera()) for c in seen}
    scenario = build_scenario(truth, computed, cameras, overlap)
    doc = build_report(scenario, args.measures, args.per_camera, args.diagnostics, args.mota_mismatches)
    if args.json:
        _emit(dumps(doc), args.json)
    if args.text:
        _emit(format_text(doc), args.text)
    if not args.json and not args.text:
        sys.stdout.write(format_text(doc))
    if args.mapping:
        write_mapping(match_truth_to_result(scenario), args.mapping)
    return EXIT_OK


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.preset == "random":
        params = RandomParams(
            cameras=args.cameras, identities=args.identities, frames=args.frames,
            mean_length=args.mean_length, overlap=args.overlap,
            fragment_rate=args.fragment_rate, merge_rate=args.merge_rate, flip_rate=args.flip_rate,
            drop_rate=args.drop_rate, spurious_rate=args.spurious_rate, jitter=args.jitter,
        )
        scenario = random_scenario(params, args.seed).corrupted
        write_homographies(scenario.cameras, out / "homographies")
    else:
        scenario = make_preset(args.preset)
    write_detections(scenario.truth, out / "gt.csv")
    write_detections(scenario.computed, out / "res.csv")
    log.info("wrote %d + %d rows to %s", len(scenario.truth), len(scenario.computed), out)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return cmd_evaluate(args) if args.command == "evaluate" else cmd_synth(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
