"""Rebuild data/verma_scm.json from a fixed seed (three-valued exogenous variables)."""

import random
import sys
from pathlib import Path

from rcmscm.graphs import random_scm_with_diagram
from rcmscm.io import save
from rcmscm.scenarios import verma_graph

OUT = Path(__file__).resolve().parent.parent / "src" / "rcmscm" / "data" / "verma_scm.json"

if __name__ == "__main__":
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 4
    M = random_scm_with_diagram(verma_graph(), random.Random(seed), exo_size=3)
    save(M, OUT)
    print(f"wrote {OUT}")
