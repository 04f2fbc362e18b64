"""``fedinet`` command line: crawl, synth, analyze, validate."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, config_for_dataset, from_mapping, load_config
from .ties import Dataset

log = logging.getLogger("fedinet")

DATA_DIR_ENV = "FEDINET_DATA_DIR"


def _resolve(path: str | None, default_name: str | None = None) -> Path:
    root = os.environ.get(DATA_DIR_ENV)
    if path is None:
        if default_name is None:
            raise ConfigError("out", "no path given")
        path = default_name
    p = Path(path)
    if not p.is_absolute() and root:
        p = Path(root) / p
    return p


def _overrides(args, names) -> dict:
    return {n: getattr(args, n) for n in names if getattr(args, n, None) is not None}


def cmd_crawl(args) -> int:
    from . import crawler
    from .client import MastodonClient

    cfg = load_config(args.config)
    cfg = from_mapping(_overrides(args, ("target_n", "t_end")), cfg)
    out = _resolve(args.out, "crawl")
    resume_bytes = Path(args.resume).read_bytes() if args.resume else None
    with MastodonClient() as client:
        ds = crawler.run(args.seed, cfg.target_n, cfg.t_end, client, out, cfg, resume_from=resume_bytes)
    print(ds.root)
    return 0


def cmd_synth(args) -> int:
    from .synth import generate_cohort, load_model

    cfg = load_config(args.config)
    model, extra = load_model(args.model)
    n_egos = args.n_egos if args.n_egos is not None else int(extra.get("n_egos", 200))
    seed = args.seed if args.seed is not None else extra.get("seed")
    out = _resolve(args.out, "synth")
    ds = generate_cohort(model, n_egos, seed, out, cfg)
    print(ds.root)
    return 0


def cmd_analyze(args) -> int:
    from .report import analyze, write_report

    ds = Dataset.open(_resolve(args.dataset))
    cfg = load_config(args.config, config_for_dataset(ds.config))
    cfg = from_mapping(_overrides(args, ("jobs", "rings_mode")), cfg)
    analysis = analyze(ds, cfg)
    out = write_report(analysis, _resolve(args.out, str(ds.root) + "-report"))
    print(out)
    return 0


def cmd_validate(args) -> int:
    from .report import validate

    ds = Dataset.open(_resolve(args.dataset))
    cfg = load_config(args.config, config_for_dataset(ds.config))
    violations = validate(ds, cfg)
    for v in violations:
        print("VIOLATION: %s" % v)
    if violations:
        print("%d violation(s)" % len(violations), file=sys.stderr)
        return 1
    print("ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fedinet", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="TOML or JSON config file")

    c = sub.add_parser("crawl", help="snowball-sample Mastodon accounts")
    common(c)
    c.add_argument("--seed", required=True, help="user@instance to start from")
    c.add_argument("--target-n", dest="target_n", type=int)
    c.add_argument("--t-end", dest="t_end", help="observation end, YYYY-MM-DD")
    c.add_argument("--out")
    c.add_argument("--resume", help="checkpoint file to resume from")
    c.set_defaults(func=cmd_crawl)

    s = sub.add_parser("synth", help="generate a synthetic cohort with planted circles")
    common(s)
    s.add_argument("--model", required=True, help="planted model file (JSON or TOML)")
    s.add_argument("--n-egos", dest="n_egos", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_synth)

    a = sub.add_parser("analyze", help="write all tables and figure data for a dataset")
    common(a)
    a.add_argument("dataset")
    a.add_argument("--out")
    a.add_argument("--jobs", type=int)
    a.add_argument("--rings", dest="rings_mode", action="store_const", const=True)
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("validate", help="check dataset and analysis invariants")
    common(v)
    v.add_argument("dataset")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        return args.func(args)
    except ConfigError as e:
        parser.error(str(e))
    except FileNotFoundError as e:
        print("fedinet: %s" % e, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
