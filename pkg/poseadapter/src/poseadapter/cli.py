"""tapkin-extract: video file -> tapkin landmark file."""

from __future__ import annotations

import argparse
import sys

from .errors import PoseAdapterError
from .extract import ExtractionConfig, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tapkin-extract",
        description="Extract 21-point hand landmarks from a video into the "
        "tapkin landmark file format, preserving container timestamps.",
    )
    parser.add_argument("--video", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--hand", choices=("left", "right", "auto"), default="auto")
    parser.add_argument("--min-confidence", type=float, default=0.5)
    parser.add_argument("--backend", choices=("mediapipe", "marker"), default="mediapipe")
    parser.add_argument("--subject", default="unknown")
    parser.add_argument("--condition", default="on_device")
    parser.add_argument("--stim-state", dest="stim_state", default="none")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    cfg = ExtractionConfig(
        video=args.video,
        output=args.out,
        hand=args.hand,
        min_confidence=args.min_confidence,
        backend=args.backend,
        subject_id=args.subject,
        condition=args.condition,
        stim_state=args.stim_state,
    )
    try:
        result = extract(cfg)
    except (PoseAdapterError, OSError, ValueError) as exc:
        print(f"tapkin-extract: error: {exc}", file=sys.stderr)
        return 2
    print(
        f"{result.output}: {result.n_frames} frames "
        f"({result.n_detected} detected, nominal {result.nominal_fps:g} fps)"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
