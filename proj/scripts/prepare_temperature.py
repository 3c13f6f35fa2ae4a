#!/usr/bin/env python3
"""Convert an annual global temperature table into data/temperature.csv.

The input holds a year column and a value column, comma or whitespace
separated; lines that do not start with a year are skipped. The output is a
`label,value` CSV with one row per year 1880..1985 (106 rows), the layout the
acceptance suite and the CLI expect.

    scripts/prepare_temperature.py source.txt
    scripts/prepare_temperature.py --column 2 --difference levels.csv
"""

import argparse
import math
import re
import sys
from pathlib import Path

FIRST, LAST = 1880, 1985


def read_table(path, column):
    rows = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        fields = [f for f in re.split(r"[,\s;]+", line.strip()) if f]
        if not fields or not re.fullmatch(r"\d{4}", fields[0]):
            continue
        if column >= len(fields):
            sys.exit(f"{path}:{lineno}: no column {column}")
        try:
            value = float(fields[column])
        except ValueError:
            sys.exit(f"{path}:{lineno}: not a number: {fields[column]!r}")
        year = int(fields[0])
        if year in rows:
            sys.exit(f"{path}:{lineno}: duplicate year {year}")
        rows[year] = value
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("source")
    ap.add_argument("--column", type=int, default=1, help="value column (0 is the year); default 1")
    ap.add_argument("--difference", action="store_true",
                    help="input holds annual levels; write year-over-year changes (needs %d)" % (FIRST - 1))
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "temperature.csv"))
    args = ap.parse_args()

    rows = read_table(args.source, args.column)
    if args.difference:
        rows = {y: rows[y] - rows[y - 1] for y in rows if y - 1 in rows}
    missing = [y for y in range(FIRST, LAST + 1) if y not in rows]
    if missing:
        sys.exit(f"missing years: {missing[:10]}{' ...' if len(missing) > 10 else ''}")
    series = [(y, rows[y]) for y in range(FIRST, LAST + 1)]
    bad = [y for y, v in series if not math.isfinite(v)]
    if bad:
        sys.exit(f"non-finite values for years {bad}")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w") as f:
        f.write("label,value\n")
        for y, v in series:
            f.write(f"{y},{v!r}\n")
    print(f"wrote {len(series)} rows to {out}")


if __name__ == "__main__":
    main()
