"""Command-line entry point: ``stochmaxwell <subcommand> [flags]``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, config_from_dict, emit_config, parse_config, with_overrides
from .experiments import run_plan, write_manifest
from .wavelet_basis import BasisError, connection_coefficients

log = logging.getLogger("stochmaxwell")

SUBCOMMAND_KINDS = {
    "run": ("energy", "long-time"),
    "ensemble": ("ensemble",),
    "converge": ("det-converge", "strong-converge"),
    "compare-fdm": ("compare-fdm",),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stochmaxwell", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUBCOMMAND_KINDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="YAML run configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--out", type=Path)
        p.add_argument("--paper-scale", action="store_true", help="32^3 grid and 100 trajectories")
    p = sub.add_parser("basis-dump")
    p.add_argument("--gamma", type=int, default=10)
    p.add_argument("--out", type=Path, default=Path("out"))
    return parser


def _load_config(args) -> RunConfig:
    kinds = SUBCOMMAND_KINDS[args.command]
    if args.config is None:
        cfg = config_from_dict({"experiment": kinds[0]})
    else:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"--config: cannot read {args.config} ({exc.strerror})") from None
        cfg = parse_config(text)
    if cfg.plan.kind not in kinds:
        raise ConfigError(f"experiment: {cfg.plan.kind!r} cannot be run by '{args.command}' (expects {', '.join(kinds)})")
    return with_overrides(cfg, seed=args.seed, threads=args.threads, out_dir=args.out, paper_scale=args.paper_scale)


def _basis_dump(args) -> int:
    cc = connection_coefficients(args.gamma)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"theta_prime_gamma{args.gamma}.csv"
    with open(path, "w") as fh:
        fh.write("k,theta_prime\n")
        for k, v in cc.table():
            fh.write(f"{k},{v!r}\n")
    print(path)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"stochmaxwell: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    if args.command == "basis-dump":
        try:
            return _basis_dump(args)
        except BasisError as exc:
            print(f"stochmaxwell: error: {exc}", file=sys.stderr)
            return 2
        except OSError as exc:
            print(f"stochmaxwell: error: {exc}", file=sys.stderr)
            return 1

    try:
        cfg = _load_config(args)
    except (ConfigError, ValueError) as exc:
        print(f"stochmaxwell: error: {exc}", file=sys.stderr)
        return 2

    logging.basicConfig(level=cfg.log_level, format="%(levelname)s %(name)s: %(message)s")
    out = Path(cfg.out_dir)
    extra: dict = {"status": "running"}
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.yaml").write_text(emit_config(cfg))
        log.info("running %s on grid %s", cfg.plan.kind, cfg.plan.grid.shape)
        extra.update(run_plan(cfg.plan, out))
        extra["status"] = "ok"
        return 0
    except Exception as exc:
        extra["status"] = "failed"
        extra["error"] = str(exc)
        print(f"stochmaxwell: error: {exc}", file=sys.stderr)
        return 1
    finally:
        try:
            write_manifest(out, cfg.plan, extra)
        except OSError:
            pass


if __name__ == "__main__":
    sys.exit(main())
