"""``genhull`` command line: fetch, profile, hull, run, meta, synth.

Every subcommand accepts ``--config FILE``: an INI file whose ``[<subcommand>]``
section holds defaults (keys are the long flag names with ``-`` replaced by
``_``). Explicit flags win over file values.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import harness, ingest, metafeatures, metamodel, synthetic
from .classifiers import ClassifierConfig
from .hull import DEFAULT_TOL, split_by_hull
from .symreg import SRConfig

log = logging.getLogger("genhull")


@dataclass
class RunConfig:
    datasets: list = field(default_factory=list)
    k: int = 10
    seed: int = 0
    classifiers: list = field(default_factory=lambda: ["logreg", "forest"])
    n_trees: int = 100
    tol: float = DEFAULT_TOL
    output: str = "records.jsonl"
    workers: int = 1
    target: str = "-1"
    cache_dir: str | None = None

    def __post_init__(self):
        if not self.datasets:
            raise ValueError("at least one dataset source is required")
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")

    def classifier_configs(self) -> list[ClassifierConfig]:
        return [ClassifierConfig(kind=k, n_trees=self.n_trees, seed=self.seed) for k in self.classifiers]


class CLIError(Exception):
    pass


def _split_list(value) -> list[str]:
    if value is None:
        return []
    if isinstance(value, (list, tuple)):
        items = []
        for v in value:
            items.extend(_split_list(v))
        return items
    return [v.strip() for v in str(value).replace("\n", ",").split(",") if v.strip()]


def load_dataset(source: str, target: str = "-1", cache_dir=None) -> ingest.Dataset:
    """Resolve ``openml:<id>`` / bare integer ids, or a .csv / .arff path."""
    s = str(source)
    if s.startswith("openml:") or s.isdigit():
        return ingest.load_openml(int(s.split(":")[-1]), cache_dir)
    path = Path(s)
    fmt = "arff" if path.suffix.lower() == ".arff" else "csv"
    return ingest.validate(ingest.load_table(path, fmt, target_column=target))


def read_matrix_csv(path, drop: str | None = None) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise CLIError(f"{path}: empty CSV")
    header, body = [c.strip() for c in rows[0]], rows[1:]
    keep = list(range(len(header)))
    if drop is not None:
        keep.remove(ingest._resolve_target(header, drop))
    try:
        return np.array([[float(r[j]) for j in keep] for r in body], dtype=float).reshape(len(body), len(keep))
    except (ValueError, IndexError) as exc:
        raise CLIError(f"{path}: {exc}") from None


# --------------------------------------------------------------------------- subcommands

def cmd_fetch(args) -> int:
    for i in _split_list(args.ids):
        path = ingest.fetch_openml(int(i), args.cache_dir)
        print(path)
    return 0


def cmd_profile(args) -> int:
    rows = []
    for src in _split_list(args.datasets):
        ds = load_dataset(src, args.target, args.cache_dir)
        rows.append(metafeatures.profile(ds, seed=args.seed).to_dict())
        log.info("profiled %s", ds.id)
    out = args.output
    if out and out.endswith(".csv"):
        with open(out, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    else:
        text = "".join(json.dumps(r) + "\n" for r in rows)
        if out:
            Path(out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    return 0


def cmd_hull(args) -> int:
    Xtr = read_matrix_csv(args.train, args.target)
    Xte = read_matrix_csv(args.test, args.target)
    split = split_by_hull(Xtr, Xte, float(args.tol), workers=int(args.workers))
    sys.stdout.write(json.dumps(split.to_dict()) + "\n")
    return 0


def cmd_run(args) -> int:
    cfg = RunConfig(
        datasets=_split_list(args.datasets), k=int(args.k), seed=int(args.seed),
        classifiers=_split_list(args.classifiers), n_trees=int(args.n_trees), tol=float(args.tol),
        output=args.output, workers=int(args.workers), target=str(args.target), cache_dir=args.cache_dir,
    )
    done = harness.completed_datasets(cfg.output)
    all_records = harness.read_records(cfg.output)
    for src in cfg.datasets:
        ds = load_dataset(src, cfg.target, cfg.cache_dir)
        if ds.id in done:
            log.info("skipping %s (already in %s)", ds.id, cfg.output)
            continue
        recs = harness.run_cv(ds, cfg.classifier_configs(), k=cfg.k, seed=cfg.seed, tol=cfg.tol,
                              workers=cfg.workers)
        harness.append_records(cfg.output, recs)
        all_records.extend(recs)
        log.info("%s: %d records", ds.id, len(recs))
    if args.summary:
        summary = harness.aggregate(all_records).to_dict()
        Path(args.summary).write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return 0


def cmd_meta(args) -> int:
    records = harness.read_records(args.records)
    if args.profiles.endswith(".csv"):
        profiles = metamodel.read_profiles_csv(args.profiles)
    else:
        profiles = [json.loads(l) for l in Path(args.profiles).read_text().splitlines() if l.strip()]
    table = metamodel.build_meta_table(profiles, records)
    if len(table) == 0:
        raise CLIError("no dataset appears in both the records and the profiles")
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    table.write_csv(outdir / "meta_table.csv")

    columns = list(metamodel.PROFILE_COLUMNS) + ["F1_train", "F1_test", "F1_in", "F1_out", "T_in"]
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["classifier", "metric"] + columns)
    svg_parts = {}
    for clf in sorted({k[1] for k in table.keys}):
        sub = table.where_classifier(clf)
        if len(sub) < 3:
            log.warning("classifier %s: fewer than 3 datasets, no correlation matrix", clf)
            continue
        mat = metamodel.correlation_matrix(sub, columns)
        for name, row in zip(columns, mat):
            w.writerow([clf, name] + ["" if not np.isfinite(v) else repr(float(v)) for v in row])
        svg_parts[clf] = metamodel.heatmap_svg(mat, columns)
    (outdir / "correlations.csv").write_text(buf.getvalue(), encoding="utf-8")
    for clf, svg in svg_parts.items():
        (outdir / f"correlations_{clf}.svg").write_text(svg, encoding="utf-8")

    report = metamodel.eval_fixed_equations(table)
    (outdir / "fixed_equations.json").write_text(json.dumps(report, indent=1) + "\n", encoding="utf-8")

    sr_cfg = SRConfig(population_size=int(args.sr_population), generations=int(args.sr_generations),
                      seed=int(args.seed))
    fronts = metamodel.fit_fronts(table, cfg=sr_cfg)
    (outdir / "pareto_fronts.json").write_text(json.dumps(fronts, indent=1) + "\n", encoding="utf-8")
    return 0


def cmd_synth(args) -> int:
    spec = synthetic.GaussianSpec(n=int(args.n), d=int(args.d), rho=float(args.rho), mu=float(args.mu),
                                  sigma=float(args.sigma), seed=int(args.seed))
    ds = synthetic.two_class_gaussians(spec, float(args.delta))
    out = open(args.output, "w", newline="", encoding="utf-8") if args.output else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(ds.feature_names + ["class"])
        for row, label in zip(ds.X, ds.y):
            w.writerow([repr(float(v)) for v in row] + [int(label)])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


# --------------------------------------------------------------------------- parser

DEFAULTS = {
    "fetch": {"ids": None, "cache_dir": None},
    "profile": {"datasets": None, "target": "-1", "seed": 0, "output": None, "cache_dir": None},
    "hull": {"train": None, "test": None, "target": None, "tol": DEFAULT_TOL, "workers": 1},
    "run": {"datasets": None, "k": 10, "seed": 0, "classifiers": "logreg,forest", "n_trees": 100,
            "tol": DEFAULT_TOL, "output": "records.jsonl", "workers": 1, "target": "-1",
            "cache_dir": None, "summary": None},
    "meta": {"records": None, "profiles": None, "outdir": "meta", "seed": 0,
             "sr_population": 300, "sr_generations": 60},
    "synth": {"n": 200, "d": 2, "rho": 0.0, "mu": 0.0, "sigma": 1.0, "delta": 3.0, "seed": 0, "output": None},
}
REQUIRED = {"fetch": ["ids"], "profile": ["datasets"], "hull": ["train", "test"], "run": ["datasets"],
            "meta": ["records", "profiles"], "synth": []}
HANDLERS = {"fetch": cmd_fetch, "profile": cmd_profile, "hull": cmd_hull, "run": cmd_run,
            "meta": cmd_meta, "synth": cmd_synth}
POSITIONAL = {"fetch": "ids", "profile": "datasets", "run": "datasets"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CLIError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="genhull", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for name, defaults in DEFAULTS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI file with a [%s] section" % name)
        pos = POSITIONAL.get(name)
        if pos:
            sp.add_argument(f"{pos}_pos", nargs="*", metavar=pos.upper())
        for key in defaults:
            # None sentinel lets config-file values fill in unspecified flags
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None)
    return p


def _resolve(ns: argparse.Namespace) -> argparse.Namespace:
    cmd = ns.command
    values = dict(DEFAULTS[cmd])
    if ns.config:
        cp = configparser.ConfigParser()
        if not cp.read(ns.config, encoding="utf-8"):
            raise CLIError(f"cannot read config file {ns.config}")
        if cp.has_section(cmd):
            for key, val in cp.items(cmd):
                if key not in values:
                    raise CLIError(f"unknown key {key!r} in [{cmd}] of {ns.config}")
                values[key] = val
    for key in DEFAULTS[cmd]:
        v = getattr(ns, key)
        if v is not None:
            values[key] = v
    pos = POSITIONAL.get(cmd)
    if pos and getattr(ns, f"{pos}_pos"):
        values[pos] = getattr(ns, f"{pos}_pos")
    for key in REQUIRED[cmd]:
        if values.get(key) in (None, "", []):
            raise CLIError(f"{cmd}: missing required option --{key.replace('_', '-')}")
    out = argparse.Namespace(**values)
    out.command = cmd
    return out


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            parser.print_usage(sys.stderr)
            raise CLIError("a subcommand is required")
        logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        args = _resolve(ns)
        return HANDLERS[args.command](args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (CLIError, ValueError, KeyError, OSError, ingest.FetchError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"genhull: error: {msg}", file=sys.stderr)
        return 2 if isinstance(exc, CLIError) else 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
