"""Full-scale study over an OpenML id list: fetch, profile, cross-validate, meta-analyse.

Resumable: records and profiles already on disk are reused. Needs network on
the first pass and hours of CPU for the complete list. At the end, the
aggregate targets for the full study are printed next to the observed values.
"""

import argparse
import csv
import json
import logging
import warnings
from pathlib import Path

import numpy as np

from genhull import harness, ingest, metafeatures, metamodel
from genhull.classifiers import ClassifierConfig
from genhull.symreg import SRConfig

log = logging.getLogger("full_scale")


def read_ids(path):
    ids = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            ids.append(int(line))
    return ids


def main():
    here = Path(__file__).parent
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ids", default=str(here / "openml_ids.txt"))
    ap.add_argument("--outdir", default="full_scale")
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--max-n", type=int, default=50_000)
    ap.add_argument("--sr-generations", type=int, default=60)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    warnings.simplefilter("ignore", metafeatures.MetricWarning)

    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    rec_path = out / "records.jsonl"
    prof_path = out / "profiles.jsonl"
    done = harness.completed_datasets(rec_path)
    profiled = {json.loads(l)["dataset_id"] for l in prof_path.read_text().splitlines()} if prof_path.exists() else set()
    classifiers = [ClassifierConfig("logreg", seed=args.seed), ClassifierConfig("forest", seed=args.seed)]

    for oid in read_ids(args.ids):
        try:
            ds = ingest.load_openml(oid)
        except (ingest.DataError, ingest.FetchError, KeyError) as exc:
            log.warning("skip OpenML %d: %s", oid, exc)
            continue
        if ds.n > args.max_n:
            log.warning("skip %s: n=%d above --max-n", ds.id, ds.n)
            continue
        if ds.id not in profiled:
            with prof_path.open("a") as fh:
                fh.write(json.dumps(metafeatures.profile(ds, seed=args.seed).to_dict()) + "\n")
        if ds.id not in done:
            recs = harness.run_cv(ds, classifiers, k=args.k, seed=args.seed, workers=args.workers)
            harness.append_records(rec_path, recs)
        log.info("%s done (n=%d, d=%d, c=%d)", ds.id, ds.n, ds.d, ds.c)

    records = harness.read_records(rec_path)
    if not records or not prof_path.exists():
        raise SystemExit("no dataset could be processed; nothing to analyse")
    profiles = [json.loads(l) for l in prof_path.read_text().splitlines() if l.strip()]
    summary = harness.aggregate(records)
    (out / "summary.json").write_text(json.dumps(summary.to_dict(), indent=1) + "\n")
    table = metamodel.build_meta_table(profiles, records)
    table.write_csv(out / "meta_table.csv")
    (out / "fixed_equations.json").write_text(json.dumps(metamodel.eval_fixed_equations(table), indent=1) + "\n")
    fronts = metamodel.fit_fronts(table, cfg=SRConfig(generations=args.sr_generations, seed=args.seed))
    (out / "pareto_fronts.json").write_text(json.dumps(fronts, indent=1) + "\n")

    lr = table.where_classifier("logreg")
    cols = ["gamma", "kappa", "idim", "rho", "T_in", "idim_ratio"]
    corr = dict(zip(cols, metamodel.correlation_matrix(lr, cols))) if len(lr) >= 3 else {}
    rows = [
        ("LR F1_test", "0.79 +- 0.05", summary.get("logreg", "F1_test").mean),
        ("RF F1_test", "0.84 +- 0.05", summary.get("forest", "F1_test").mean),
        ("corr(gamma, kappa)", "> 0 (0.84)", corr["gamma"][1] if corr else np.nan),
        ("corr(idim, rho)", "< 0", corr["idim"][3] if corr else np.nan),
        ("corr(T_in, idim_ratio)", "> 0", corr["T_in"][5] if corr else np.nan),
    ]
    for clf in ("logreg", "forest"):
        rows.append((f"{clf} F1_in - F1_out", "> 0",
                     summary.get(clf, "F1_in").mean - summary.get(clf, "F1_out").mean))
    with (out / "targets.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["quantity", "target", "observed"])
        for name, target, value in rows:
            w.writerow([name, target, f"{value:.4f}"])
            print(f"{name:<24} target {target:<14} observed {value:.4f}")


if __name__ == "__main__":
    main()
