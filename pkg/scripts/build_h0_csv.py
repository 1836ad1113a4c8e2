"""Regenerate ``src/gridsynth/data/h0_profile.csv`` from the BDEW selp table.

The BDEW standard load profile table ships with demandlib (MIT licence) as
``demandlib/bdew/bdew_data/selp_series.csv``.  Run::

    python scripts/build_h0_csv.py path/to/selp_series.csv

Values are rescaled so that one reference year (2023, no holidays) sums to
exactly 1 kWh.
"""
import csv
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from gridsynth.loads import DAY_TYPES, SEASONS, H0Profile  # noqa: E402

WEEKDAY_TO_DAYTYPE = {1: "workday", 6: "saturday", 7: "sunday"}


def main(src):
    raw = {}
    with open(src, newline="") as fh:
        for row in csv.DictReader(fh):
            daytype = WEEKDAY_TO_DAYTYPE.get(int(row["weekday"]))
            if daytype is None:
                continue
            raw.setdefault((daytype, row["period"]), []).append(float(row["h0"]))
    for key, vals in raw.items():
        assert len(vals) == 96, key
    profile = H0Profile(raw).normalized()
    out = Path(__file__).resolve().parents[1] / "src/gridsynth/data/h0_profile.csv"
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["daytype", "season", "quarter_hour_index", "value"])
        for d in DAY_TYPES:
            for s in SEASONS:
                for q, v in enumerate(profile.values[(d, s)]):
                    w.writerow([d, s, q, repr(float(v))])
    print("wrote", out)


if __name__ == "__main__":
    main(sys.argv[1])
