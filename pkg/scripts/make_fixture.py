#!/usr/bin/env python3
"""Regenerate the bundled synthetic compliance-report fixture and its tally.

The fixture is 200 rows: 120 "None", 30 "Administrative", 50 "Environmental
Health & Safety" (46 with inspection comments, 4 blank). The tally JSON is
recounted from the emitted CSV with plain csv/Counter code so it stays an
independent record of what the file contains.

Run from the repository root:  python3 scripts/make_fixture.py
"""

from __future__ import annotations

import csv
import json
import random
import sys
from collections import Counter
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "violation_miner" / "data"

EHS = "Environmental Health & Safety"
ADMIN = "Administrative"
NONE = "None"

EHS_COMMENTS = [
    "Brine spill observed on the well pad; flowback leaked from the tank battery toward the access road.",
    "Methane venting from the annulus of the gas well; combustion flare not lit at the pad.",
    "Diesel fuel spilled near the blender during fracking operations; mats placed over the puddle.",
    "Erosion and sediment controls not maintained; silt laden drainage entering the ditch along the road.",
    "Residual waste disposed in an unlined pit; mud and drill cuttings dumped on the ground.",
    "Tank truck leaking brine onto the ground; driver excavated a small sump to contain the spill.",
    "Flowback water stored in an open impoundment; liner torn near the northwest corner of the pit.",
    "Cement squeeze performed on the casing; gas migration detected behind the surface casing of the well.",
    "Oil sheen on the puddle beside the barrel storage area; spill traced to a leaking fuel barrel.",
    "Excavation through the erosion control barrier; sediment discharged to the drainage swale.",
    "Operator venting gas while drilling out cement plugs; methane monitor alarmed at the well head.",
    "Silt fence failed after rain; mud laden drainage from the pad reached the road culvert.",
    "Frack fluid spill at the blender; brine and diesel mixture pooled in the containment sump.",
    "Waste mud hauled by truck without a manifest; some mud spilled on the township road.",
    "Combustion unit malfunction; unburned gas and methane vented directly to atmosphere at the pad.",
    "Pit wall erosion noted; silt and sediment entering the freshwater impoundment.",
    "Drilling mud circulated to the surface through a shallow sump; ground around the cellar stained.",
    "Fuel transfer from the tanker truck spilled diesel near the wooden mats at the well pad entrance.",
    "Flowback line parted during fracking; brine sprayed over the barrels staged on the pad.",
    "Improper disposal of residual waste; drums and barrels buried in the reserve pit.",
    "Gas bubbling in the puddle near the wellhead; methane detected in the water well of a nearby residence.",
    "Cement returns dumped behind the pad; excavated soil stockpile lacks erosion controls.",
    "Oil and brine leaking from the stuffing box; drip barrel overflowed onto the ground and into the drain.",
    "Brine spilled from the flowback tank; drainage ditch silted in below the pad.",
    "Methane and gas odors at the well cellar; casing vent flowing gas continuously.",
    "Diesel fuel leaked from the blender onto the mats; contaminated soil excavated and drummed.",
    "Erosion of the access road; sediment and silt washed into the drainage channel toward the creek.",
    "Wastes from the pit disposed on the ground without approval; mud covered the vegetation.",
    "Truck leaked brine along the road; driver failed to report the spill to the department.",
    "Flowback impoundment overtopped after the storm; brine reached the sump and the drain below the pad.",
    "Cementing operations suspended; gas flow observed between casings at the well.",
    "Oil spill at the barrel rack; puddles of oil and fuel beside the storage tanks.",
    "Excavating without erosion controls; sediment discharged into the roadside drainage.",
    "Gas vented while drilling; methane reading above the action level at the pad.",
    "Silt barrier collapsed; mud laden water drained across the pad to the road.",
    "Spill of frack fluid near the blender; brine puddle left unaddressed overnight in the sump area.",
    "Waste drilling mud spilled from the truck during transport on the haul road.",
    "Combustion flare smoking heavily; vented gas and methane exceeded permitted volumes.",
    "Reserve pit erosion; silt and sediment escaped toward the impoundment embankment.",
    "Mud pits unlined; drilling returns seeped into the ground near the sump.",
    "Fuel spilled while refueling the excavator; diesel soaked the mats near the well pad gate.",
    "Flowback hose burst during the frack stage; brine misted over the barrels and the pad.",
    "Disposal pit received residual waste and oil; barrels crushed and buried.",
    "Gas seeping at the puddle by the cellar; methane in the private water well confirmed.",
    "Cement plug failure; excavation of the cellar exposed gas flow at the surface casing.",
    "Brine and oil leaked from the drip tank onto the ground; liquid reached the French drain.",
]

ADMIN_COMMENTS = [
    "Well record not submitted within the required period.",
    "Permit number not displayed at the site entrance.",
    "Operator failed to notify the department before commencing work.",
    "Annual production report missing for the subject location.",
    "Certification paperwork incomplete at the time of inspection.",
    "Bond coverage documentation not available for review.",
    "Transfer of permit not registered with the district office.",
    "Required signage absent along the access route.",
    "Inspection access delayed; gate locked and contact unreachable.",
    "Monthly monitoring logs not kept current.",
]

NONE_COMMENT = "Routine inspection completed; no violations observed."

EHS_CODES = [
    ("78.56", "Failure to properly store, transport, process or dispose of residual waste.", 20),
    ("102.4", "Failure to minimize accelerated erosion, implement E&S plan, maintain E&S controls.", 14),
    ("78.54a", "Failure to prevent migration of gas or brine into fresh groundwater.", 10),
    ("401", "Discharge of pollution material to waters of the Commonwealth.", 6),
]

ADMIN_CODES = [
    ("OGA78.121", "Failure to submit well record or completion report within 30 days.", 18),
    ("OGA201", "Failure to display the well permit number at the well site.", 12),
]

# violations per year, 2008-2018 (sums to 80)
YEAR_PLAN = {
    2008: 6, 2009: 6, 2010: 10, 2011: 9, 2012: 7, 2013: 6,
    2014: 6, 2015: 6, 2016: 7, 2017: 7, 2018: 10,
}


def build_rows() -> list[dict[str, str]]:
    types = [NONE] * 120 + [ADMIN] * 30 + [EHS] * 50
    random.Random(2008).shuffle(types)

    violation_years = [y for y, n in sorted(YEAR_PLAN.items()) for _ in range(n)]
    ehs_codes = [(c, d) for c, d, n in EHS_CODES for _ in range(n)]
    admin_codes = [(c, d) for c, d, n in ADMIN_CODES for _ in range(n)]

    rows = []
    counters = {EHS: 0, ADMIN: 0, NONE: 0}
    violation_index = 0
    for i, vtype in enumerate(types):
        j = counters[vtype]
        counters[vtype] += 1
        if vtype == NONE:
            # two dateless rows exercise the optional-date path
            date = "" if j < 2 else f"{2008 + j % 11:04d}-{(i % 12) + 1:02d}-{(i % 28) + 1:02d}"
            comment = NONE_COMMENT if j % 2 == 0 else ""
            code, description = "", ""
        else:
            year = violation_years[violation_index]
            violation_index += 1
            date = f"{year:04d}-{(i % 12) + 1:02d}-{(i % 28) + 1:02d}"
            if vtype == EHS:
                code, description = ehs_codes[j]
                comment = EHS_COMMENTS[j] if j < len(EHS_COMMENTS) else ""
            else:
                code, description = admin_codes[j]
                comment = ADMIN_COMMENTS[j % len(ADMIN_COMMENTS)] if j < 20 else ""
        rows.append(
            {
                "Inspection ID": f"INSP-{i + 1:04d}",
                "Inspection Date": date,
                "Violation Type": vtype,
                "Violation Code": code,
                "Violation Description": description,
                "Inspection Comment": comment,
            }
        )
    return rows


def recount_tally(csv_path: Path, top_n: int = 5) -> dict:
    """Independent recount of the emitted file with plain csv/Counter."""
    by_type: Counter[str] = Counter()
    by_year: Counter[int] = Counter()
    descriptions: Counter[str] = Counter()
    total = 0
    selected = 0
    with open(csv_path, newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            total += 1
            vtype = row["Violation Type"]
            by_type[vtype] += 1
            if vtype != NONE:
                if row["Inspection Date"]:
                    by_year[int(row["Inspection Date"][:4])] += 1
                if row["Inspection Comment"].strip():
                    selected += 1
                if row["Violation Description"]:
                    descriptions[row["Violation Description"]] += 1
    top = sorted(descriptions.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]
    return {
        "total_records": total,
        "selected_records": selected,
        "count_by_type": dict(sorted(by_type.items())),
        "count_by_year": {str(y): c for y, c in sorted(by_year.items())},
        "top_codes": [{"description": d, "count": c} for d, c in top],
    }


def corpus_word_counts(csv_path: Path) -> Counter:
    """Brute-force token counts over the EHS comment corpus (plain Counter,
    independent of the vocabulary builder)."""
    from violation_miner.preprocess import preprocess

    counts: Counter[str] = Counter()
    with open(csv_path, newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            if row["Violation Type"] == EHS and row["Inspection Comment"].strip():
                counts.update(preprocess(row["Inspection Comment"]).tokens)
    return counts


def check_keyword_coverage(counts: Counter, min_freq: int = 3) -> None:
    """Every bundled catalog keyword must clear the fixture's threshold."""
    from violation_miner.vocab import _parse_catalog_lines, default_catalog_lines

    missing = [
        (kw, counts[kw])
        for _, kw in _parse_catalog_lines(default_catalog_lines(), "<default>")
        if counts[kw] < min_freq
    ]
    if missing:
        sys.exit(f"fixture comments under-cover catalog keywords: {missing}")


def main() -> None:
    rows = build_rows()
    csv_path = DATA_DIR / "synthetic_report.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)

    tally = recount_tally(csv_path)
    tally_path = DATA_DIR / "synthetic_report_tally.json"
    tally_path.write_text(json.dumps(tally, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    counts = corpus_word_counts(csv_path)
    check_keyword_coverage(counts)
    oracle_path = DATA_DIR.parent.parent.parent / "tests" / "data" / "fixture_word_counts.json"
    oracle = {"token_counts": dict(sorted(counts.items())), "total_tokens": sum(counts.values())}
    oracle_path.write_text(json.dumps(oracle, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    print(f"wrote {csv_path} ({len(rows)} rows), {tally_path}, {oracle_path}")
    print(json.dumps(tally["count_by_type"], indent=2))


if __name__ == "__main__":
    main()
