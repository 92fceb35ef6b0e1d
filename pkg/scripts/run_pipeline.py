#!/usr/bin/env python3
"""Run the full pipeline (stats -> train -> analyze -> report) on the bundled
synthetic fixture.

Usage: python3 scripts/run_pipeline.py [out_dir] [seed]
"""

from __future__ import annotations

import sys
from importlib import resources

from violation_miner.cli import main


def run(out_dir: str = "out", seed: str = "7") -> int:
    config = str(resources.files("violation_miner").joinpath("data/fixture_config.ini"))
    for command in ("stats", "train", "analyze", "report"):
        code = main([command, "--config", config, "--out", out_dir, "--seed", seed])
        if code != 0:
            return code
    print(f"\npipeline complete; artifacts in {out_dir}/")
    return 0


if __name__ == "__main__":
    sys.exit(run(*sys.argv[1:3]))
