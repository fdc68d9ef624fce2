#!/usr/bin/env python3
"""Write the UCI Multiple Features files (mfeat-fac, -fou, ...) in their
original whitespace-separated layout.

The CSV copies shipped inside the mvlearn wheel carry a header row and a
trailing label column; both are stripped here. Row order is preserved, so
class i occupies rows [200*i, 200*(i+1)).

    pip download mvlearn --no-deps -d /tmp/mv
    python3 tools/extract_mfeat.py /tmp/mv/mvlearn-*.whl data/mfeat
"""
import csv
import io
import pathlib
import sys
import zipfile

VIEWS = ("fac", "fou", "kar", "mor", "pix", "zer")


def main(wheel, out_dir):
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(wheel) as zf:
        for tag in VIEWS:
            name = f"mvlearn/datasets/UCImultifeature/mfeat-{tag}.csv"
            rows = list(csv.reader(io.TextIOWrapper(zf.open(name))))[1:]
            with open(out / f"mfeat-{tag}", "w") as fh:
                for r in rows:
                    fh.write(" ".join(r[:-1]) + "\n")
            print(f"mfeat-{tag}: {len(rows)} rows x {len(rows[0]) - 1} cols")


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2])
