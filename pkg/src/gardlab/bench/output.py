"""CSV/JSON emission with a stable, platform-independent number format."""
import csv
import json
import math
import os

from .. import __version__
from .._backend import BACKEND


def fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if value is None:
        return ""
    return str(value)


def columns_of(rows):
    cols = []
    for row in rows:
        for k in row:
            if k not in cols:
                cols.append(k)
    return cols


def write_csv(path, rows):
    cols = columns_of(rows)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([fmt(row.get(c)) for c in cols])


def output_paths(out):
    stem, _ = os.path.splitext(out)
    return {"summary": out, "trials": stem + ".trials.csv", "json": stem + ".json"}


def write_result(result, cfg, out, seed):
    """Write summary, per-trial and extra tables plus the companion JSON; return the paths."""
    paths = output_paths(out)
    stem = os.path.splitext(out)[0]
    os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
    write_csv(paths["summary"], result.summary)
    write_csv(paths["trials"], result.trials)
    for name, rows in result.tables.items():
        paths[name] = f"{stem}.{name}.csv"
        write_csv(paths[name], rows)
    meta = {"experiment": result.experiment, "seed": seed, "version": __version__,
            "backend": BACKEND, "config": cfg.to_dict(),
            "outputs": {k: os.path.basename(v) for k, v in paths.items() if k != "json"}}
    with open(paths["json"], "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths
