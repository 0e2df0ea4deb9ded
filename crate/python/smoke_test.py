#!/usr/bin/env python3
"""End-to-end smoke test of the repeater_py extension module.

Builds the extension with cargo, copies the shared library next to this
file, imports it, and checks a handful of known values across states,
measures, the swap protocol, chain folding, resources, and robustness.
"""

import json
import math
import pathlib
import shutil
import subprocess
import sys

ROOT = pathlib.Path(__file__).resolve().parents[1]
HERE = pathlib.Path(__file__).resolve().parent


def build_extension():
    subprocess.run(["cargo", "build", "-p", "repeater-py"], cwd=ROOT, check=True)
    shutil.copy2(ROOT / "target" / "debug" / "librepeater_py.so", HERE / "repeater_py.so")


def close(a, b, tol=1e-12):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    build_extension()
    sys.path.insert(0, str(HERE))
    import repeater_py as rp

    # States and measures.
    w = rp.State.werner(0.8161)
    close(w.concurrence(), 0.6322)
    close(w.fef(), 0.8161)
    close(w.ofef_upper(), (1 + 0.6322) / 2)
    report = w.measures()
    assert set(report) == {"concurrence", "negativity", "fef", "ofef_upper", "otf"}
    close(report["otf"], rp.otf_from_fef(0.8161))
    assert w.sampled_fef(4000, 11) <= w.fef() + 1e-9

    fam = rp.State.family(0.52, 0.5)
    close(fam.concurrence(), rp.concurrence_family(0.52, 0.5))
    close(rp.concurrence_family(0.52, 0.5), 0.48)
    roundtrip = rp.State.from_matrix(fam.matrix())
    assert fam.trace_distance(roundtrip) <= 1e-12

    eigs = sorted(rp.State.nmes(0.75).eigenvalues())
    close(eigs[-1], 1.0, 1e-9)
    close(rp.entropy_of_pair(0.75), 0.8112781244591328, 1e-12)

    mc = rp.State.family(0.2, 0.5).teleport_fidelity_mc(20000, 7)
    assert abs(mc - rp.otf_from_fef(rp.State.family(0.2, 0.5).fef())) < 0.02

    # Single-node swap: a feasible point attains the link optimum.
    link = rp.ofef_family(0.52, 0.5)
    close(link, 0.5553846153846154)
    close(rp.average_ofef_single_node(0.52, 0.5, 0.75, 0.6), link)
    feas = rp.feasibility_single_node(0.52, 0.5, 0.75, 0.6)
    assert feas["feasible"] and all(feas["outcome_feasible"])
    assert rp.max_feasible_alpha(0.52, 0.5) >= 0.75
    assert rp.max_feasible_beta(0.52, 0.5, 0.75) >= 0.6

    outcomes = rp.single_node_outcomes(0.52, 0.5, 0.75, 0.6)
    assert len(outcomes) == 4
    close(sum(o["probability"] for o in outcomes), 1.0, 1e-10)
    assert all(0.0 <= o["p_eff"] <= 1.0 for o in outcomes if o["state"] is not None)

    cascade = rp.two_node_cascade(0.5, 0.7, 0.8, 0.6)
    assert len(cascade) == 16
    close(sum(o["probability"] for o in cascade), 1.0, 1e-10)

    lo, hi = rp.two_noisy_window(0.95, 0.55)
    assert abs(lo - 0.19) < 5e-3 and abs(hi - 0.25) < 5e-3

    # Chain folding.
    folded = rp.fold_alphas([0.75, 0.8])
    close(rp.concurrence_nmes(folded), rp.concurrence_nmes(0.75) * rp.concurrence_nmes(0.8))
    close(folded, rp.rpbes_combine(0.75, 0.8))
    config = {
        "segments": [
            {"kind": "nmes", "alpha": 0.75},
            {"kind": "nmes", "alpha": 0.8},
            {"kind": "family", "p": 0.9, "delta": 0.6},
            {"kind": "nmes", "alpha": 0.84},
        ],
        "nodes": [{"kind": "pvm", "beta": 0.5}] * 3,
        "noisy_index": 3,
    }
    reduction = rp.reduce_chain(json.dumps(config))
    close(reduction["alpha_left"], folded)
    close(reduction["alpha_right"], 0.84)
    assert reduction["p"] == 0.9 and reduction["delta"] == 0.6

    # Direct measurement on a hand-built chain.
    chain = rp.State.bell(0).tensor(rp.State.nmes(0.75))
    assert chain.n_qubits == 4
    ensemble = chain.measure_pvm(1, 0.5)
    close(sum(o["probability"] for o in ensemble), 1.0, 1e-10)

    # Resources.
    rep = rp.resource_report(10, 0.9, 0.6, 0.8161)
    close(rep["rv"], rep["rv_upper"])
    assert 15.0 < rep["copies_required"] < 15.2
    assert math.ceil(rep["copies_required"]) == 16
    rate, positive = rp.hashing_rate(0.8161)
    assert positive and 0.0195 < rate < 0.0205
    ends = rp.saved_resource_at_position(9, 1, 0.9, 0.6)
    mid = rp.saved_resource_at_position(9, 5, 0.9, 0.6)
    assert mid < ends <= rp.saved_resource_bound(9, 0.9, 0.6) + 1e-12
    assert rp.saved_resource_bound(10**6, 0.9, 0.6) <= rp.saved_resource_limit(0.9, 0.6)
    assert rp.copies_required(20, 0.9, 0.8161) > rp.copies_required(10, 0.9, 0.8161)

    # Robustness.
    close(rp.baseline_balanced(0.8), 0.50625)
    point = rp.robustness_point("white", 0.8, 0.04)
    assert point["in_validity_range"] and abs(point["pct_change"] - 0.29) < 0.03
    povm = rp.robustness_point("povm_white", 0.8, 0.0, eta=0.0)
    close(povm["f_noisy"], povm["f_opt"], 1e-9)
    close(povm["f_opt"], 81 / 160, 1e-12)
    grid = rp.table1()
    assert len(grid) == 4 and all(len(row) == 4 for row in grid)
    assert abs(grid[1][1] - 0.40) < 0.02

    # Domain errors surface as ValueError.
    for bad in (
        lambda: rp.State.family(1.5, 0.5),
        lambda: rp.State.nmes(0.0),
        lambda: rp.robustness_point("unknown", 0.8),
        lambda: rp.reduce_chain("{}"),
    ):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("smoke test passed")


if __name__ == "__main__":
    main()
