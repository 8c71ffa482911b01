"""Smoke test for the compiled extension: python python/smoke_test.py"""
import math
import tempfile
from pathlib import Path

import flexkrylov


def main():
    assert math.isclose(flexkrylov.spectral_bound(2.0), 1.0 / 3.0, rel_tol=1e-15)

    hist = flexkrylov.run_experiment("fig1", n=60, iters=20)
    by_method = {h["method"]: h for h in hist}
    assert set(by_method) == {"full", "alg1-modified", "alg1-standard", "bound"}
    for q in by_method["alg1-modified"]["reduction_factors"]:
        assert abs(q - 1.0 / 3.0) < 1e-8, q

    with tempfile.TemporaryDirectory() as out:
        hist = flexkrylov.run_experiment(
            "fig2", n=300, iters=20, eta=[0.2, 0.8], out=out, csv=True, audit=True
        )
        assert len(hist) == 4
        assert all(h["audits"] for h in hist)
        assert (Path(out) / "fig2_psd_eta0.2.csv").exists()
        assert (Path(out) / "audit.txt").exists()

    try:
        flexkrylov.run_experiment("fig2", eta=[1.5])
    except ValueError:
        pass
    else:
        raise AssertionError("eta outside (0, 1) accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
