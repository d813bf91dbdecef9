"""Exercise the Python bindings end to end. Run python/build_ext.sh first."""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import latentnn  # noqa: E402


def main():
    obs = latentnn.ObservationMatrix(2, 3, [(0, 0, 1.0), (0, 1, 2.0), (1, 0, 0.0), (1, 1, 1.0), (1, 2, 5.0)])
    assert obs.shape == (2, 3) and len(obs) == 5
    assert obs.transpose().get(2, 1) == 5.0

    overlap, mean_diff, var = latentnn.pair_stats(obs, 0, 1)
    assert (overlap, mean_diff, var) == (2, 1.0, 0.0)

    value, prov = latentnn.estimate(obs, 0, 2)
    assert (value, prov) == (6.0, "estimated")
    assert latentnn.basic_estimate(obs, 1, 0, 0, 2) == 6.0

    est = latentnn.complete(obs)
    assert est.get(0, 2) == 6.0
    assert est.provenance(0, 0) == "observed-passthrough"

    try:
        latentnn.complete(obs, k=0)
    except ValueError:
        pass
    else:
        raise AssertionError("k = 0 accepted")

    spec = {
        "shape": [30, 30],
        "latent_measure": {"kind": "uniform-cube", "d": 1},
        "latent_fn": {"kind": "additive"},
        "noise": {"kind": "none"},
        "p": 0.5,
        "seed": 7,
    }
    observed, truth = latentnn.synth(json.dumps(spec))
    full = latentnn.complete(observed, k=3, target="all-entries")
    err = latentnn.mse(full.values(), truth)
    assert err < 1e-20, err

    report = latentnn.matrix_mse_bound(10_000, 10_000, 0.1, b_e=0.5)
    assert math.isclose(report["F2"], 50 ** (-1 / 3), rel_tol=1e-15)

    assert latentnn.flatten_index([2, 3, 4], [0], [1, 2, 3]) == (1, 11)
    for t in range(2, 7):
        rows, cols = latentnn.optimal_partition([5] * t)
        assert len(cols) == 2 * t // 3, (t, rows, cols)

    print(f"latentnn {latentnn.__version__}: python smoke test passed")


if __name__ == "__main__":
    main()
