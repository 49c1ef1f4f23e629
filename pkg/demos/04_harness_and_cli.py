"""Running the shipped experiments through the harness, as the ``iq`` command does.

``run_experiment`` takes the same JSON configuration as ``iq experiment`` and
returns per-run rows and a per-iteration summary. The exoplanet and GP
configurations compare against brute-force reference means stored with the
package. The same runs from a shell::

    iq experiment gp --config configs/gp.json --output results/gp
    iq sweep --config configs/toy2.json --param sigma --grid 0.5,1,2
"""
import json
import os

import numpy as np

from iquad.harness import run_experiment

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def final_mse(name, method, seeds=5):
    with open(os.path.join(CONFIGS, f"{name}.json"), encoding="utf-8") as fh:
        raw = json.load(fh)
    raw.update(method=method, seeds=seeds, output=None)
    rep = run_experiment(raw, timestamp=False)
    T = max(r["t"] for r in rep.rows)
    errs = [r["sq_error"] for r in rep.rows
            if r["t"] == T and r["scope"] == "cumulative" and r["quantity"] == "avg"]
    return float(np.median(errs)), rep.notes


for name, methods in (("gp", ("am_igh_dm", "amis")), ("exoplanet", ("am_igh", "amis"))):
    for method in methods:
        mse, notes = final_mse(name, method)
        print(f"{name:9s} {method:9s} median final MSE over 5 seeds: {mse:.3g}")
    print("  " + "\n  ".join(n for n in notes if n.startswith("reference")))
