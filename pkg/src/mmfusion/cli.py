"""Command-line entry point: ``mmfusion {synth,project,run,config}``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import pipeline
from .config import PipelineConfig, dump_config, load_config, parse_bool
from .errors import ConfigError, MMFusionError, NumericalError
from .evaluation import VARIANTS
from .synth import SCENARIOS, synth

log = logging.getLogger("mmfusion")


def _bool(text):
    try:
        return parse_bool(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _opt_float(text):
    return None if text.lower() in ("none", "auto") else float(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmfusion", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a deterministic synthetic dataset")
    p.add_argument("--scenario", choices=SCENARIOS, default="features-complementary")
    p.add_argument("--n", type=int, default=139, help="number of subjects")
    p.add_argument("--dims", type=int, nargs="+", help="X Y N for volumes; p [q] for features")
    p.add_argument("--classes", type=int, choices=(2, 3), default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("project", help="intensity projections + toy descriptors from volumes")
    p.add_argument("--config")
    p.add_argument("--volumes", help="directory holding <id>_t1.mhd / <id>_t2.mhd")
    p.add_argument("--annotations", help="CSV id,t1_slice,t2_slice")
    p.add_argument("--labels")
    p.add_argument("--half-window", type=int)
    p.add_argument("--image-size", type=int)
    p.add_argument("--out")

    p = sub.add_parser("run", help="cross-validate the pipeline variants and write reports")
    p.add_argument("--config")
    p.add_argument("--t1-features")
    p.add_argument("--t2-features")
    p.add_argument("--labels")
    p.add_argument("--variant", choices=VARIANTS + ("all",))
    p.add_argument("--folds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--svm-c", type=float)
    p.add_argument("--cca-epsilon", type=_opt_float)
    p.add_argument("--cca-dmax", type=int)
    p.add_argument("--adasyn", type=_bool)
    p.add_argument("--adasyn-beta", type=float)
    p.add_argument("--adasyn-k", type=int)
    p.add_argument("--out")

    p = sub.add_parser("config", help="print configuration")
    p.add_argument("--dump-defaults", action="store_true", help="print every key with its default")
    p.add_argument("--config", help="print the effective configuration of this file")
    return parser


def _overrides(args, keys) -> dict:
    return {k: getattr(args, k, None) for k in keys}


def _cmd_synth(args) -> int:
    paths = synth(args.out, args.scenario, args.n, args.dims, args.seed, args.classes)
    print(f"wrote {len(paths)} files under {args.out}")
    return 0


def _cmd_project(args) -> int:
    over = _overrides(args, ("volumes", "annotations", "labels", "half_window", "image_size", "out"))
    cfg = load_config(args.config, over).validate(("volumes", "annotations"))
    t1, _ = pipeline.project(cfg)
    print(f"projected {t1.n_samples} subjects into {cfg.out}")
    return 0


def _cmd_run(args) -> int:
    keys = (
        "t1_features", "t2_features", "labels", "variant", "folds", "seed", "svm_c",
        "cca_epsilon", "cca_dmax", "adasyn", "adasyn_beta", "adasyn_k", "out",
    )  # fmt: skip
    cfg = load_config(args.config, _overrides(args, keys))
    need = ("volumes", "annotations") if cfg.input_mode == "volumes" else ("t1_features", "t2_features")
    cfg.validate(need + (("labels",) if cfg.labels else ()))
    report = pipeline.run(cfg)
    sys.stdout.write(report.to_text())
    return 0


def _cmd_config(args) -> int:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    sys.stdout.write(dump_config(cfg))
    return 0


COMMANDS = {"synth": _cmd_synth, "project": _cmd_project, "run": _cmd_run, "config": _cmd_config}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except MMFusionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except np.linalg.LinAlgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NumericalError.exit_code


if __name__ == "__main__":
    sys.exit(main())
