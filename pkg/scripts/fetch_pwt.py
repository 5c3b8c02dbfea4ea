#!/usr/bin/env python3
"""Fetch the Penn World Table 10.01 OECD extract used by the benchmarks.

Downloads the official Stata release, keeps the 38 OECD members for
2015-2019 with output-side real GDP (cgdpo), employment (emp) and capital
stock (cn), and writes data/pwt1001_oecd_2015_2019.csv. Needs network
access and pandas.

Usage: python3 scripts/fetch_pwt.py [--url URL] [--out PATH]
"""

import argparse
import os
import sys

import pandas as pd

PWT_URL = "https://www.rug.nl/ggdc/docs/pwt1001.dta"
OECD = [
    "AUS", "AUT", "BEL", "CAN", "CHE", "CHL", "COL", "CRI", "CZE", "DEU",
    "DNK", "ESP", "EST", "FIN", "FRA", "GBR", "GRC", "HUN", "IRL", "ISL",
    "ISR", "ITA", "JPN", "KOR", "LTU", "LUX", "LVA", "MEX", "NLD", "NOR",
    "NZL", "POL", "PRT", "SVK", "SVN", "SWE", "TUR", "USA",
]
YEARS = range(2015, 2020)
DEFAULT_OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                           os.pardir, "data", "pwt1001_oecd_2015_2019.csv")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--url", default=PWT_URL)
    parser.add_argument("--out", default=DEFAULT_OUT)
    args = parser.parse_args(argv)

    print(f"downloading {args.url} ...", file=sys.stderr)
    raw = pd.read_stata(args.url,
                        columns=["countrycode", "year", "cgdpo", "emp", "cn"])
    subset = raw[raw["countrycode"].isin(OECD)
                 & raw["year"].isin(YEARS)].copy()
    subset = subset.rename(columns={"countrycode": "country"})
    subset = subset.dropna(subset=["cgdpo", "emp", "cn"])
    subset["year"] = subset["year"].astype(int)
    subset = subset.sort_values(["country", "year"])

    expected = len(OECD) * len(YEARS)
    if len(subset) != expected:
        print(f"warning: {len(subset)} complete rows "
              f"(expected {expected}); missing values were dropped",
              file=sys.stderr)

    os.makedirs(os.path.dirname(args.out), exist_ok=True)
    subset.to_csv(args.out, index=False,
                  columns=["country", "year", "cgdpo", "emp", "cn"])
    print(f"wrote {len(subset)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
