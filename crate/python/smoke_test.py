#!/usr/bin/env python3
"""Smoke test for the delayq extension module.

Builds nothing itself: it locates the cdylib produced by
`cargo build -p delayq-py [--release]`, stages it under an importable
name, and drives the main entry points once.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def locate_cdylib() -> Path:
    candidates = [
        REPO / "target" / "release" / "libdelayq.so",
        REPO / "target" / "debug" / "libdelayq.so",
        REPO / "target" / "release" / "libdelayq.dylib",
        REPO / "target" / "debug" / "libdelayq.dylib",
    ]
    found = [p for p in candidates if p.exists()]
    if not found:
        sys.exit(
            "libdelayq not found — build it first:\n"
            "    cargo build -p delayq-py --release"
        )
    return max(found, key=lambda p: p.stat().st_mtime)


def stage(cdylib: Path, workdir: Path) -> None:
    suffix = ".so" if cdylib.suffix == ".so" else ".so"  # import name on linux
    shutil.copy2(cdylib, workdir / f"delayq{suffix}")
    sys.path.insert(0, str(workdir))


def approx(got: float, want: float, tol: float, label: str) -> None:
    err = abs(got - want)
    status = "ok" if err <= tol else "FAIL"
    print(f"  {label}: {status} (got {got:.10g}, want {want:.10g}, err {err:.2e})")
    if err > tol:
        sys.exit(1)


def main() -> None:
    workdir = Path(tempfile.mkdtemp(prefix="delayq-smoke-"))
    stage(locate_cdylib(), workdir)
    import delayq

    print("stability formulas:")
    approx(delayq.delta_cr_constant(3, 1), 2.0576512039621833, 1e-12, "delta_cr_constant(3,1)")
    approx(delayq.omega_cr_constant(3, 1), math.sqrt(5) / 2, 1e-12, "omega_cr_constant(3,1)")
    approx(delayq.delta_mod_constant(3, 1, 1, 0.2), 1.9682084848621915, 1e-12, "delta_mod_constant")
    approx(delayq.delta_cr_ma(10, 1), 2.1448124610796588, 1e-9, "delta_cr_ma(10,1)")
    approx(delayq.delta_mod_ma(10, 1, 1, 0.2), 2.218349324124907, 1e-9, "delta_mod_ma")
    approx(
        delayq.delta_mod_ma_slow_flow(10, 1, 1, 0.2),
        2.0712755980344108,
        1e-9,
        "delta_mod_ma_slow_flow",
    )

    print("choice fractions:")
    p1, p2 = delayq.choice_fraction(1.0, 2.0)
    approx(p1, 0.7310585786300049, 1e-15, "p1(1,2)")
    approx(p1 + p2, 1.0, 1e-15, "p1 + p2")

    print("stability report:")
    p = delayq.Params(lam=10.0, mu=1.0, delta=2.18, alpha=1.0, epsilon=0.2,
                      gamma=2 * delayq.omega_ma(10.0, 1.0, delayq.delta_cr_ma(10.0, 1.0)))
    report = delayq.stability_report("moving-average", p)
    assert report["resonant"] is True
    assert report["slow_flow_sign_conflict"] is True
    approx(report["delta_mod"], 2.218349324124907, 1e-9, "report delta_mod")
    approx(report["slow_flow_delta_mod"], 2.0712755980344108, 1e-9, "report alternative")

    print("integration + classification:")
    p5 = delayq.Params(lam=3.0, mu=1.0, delta=1.947, alpha=1.0, epsilon=0.2,
                       gamma=math.sqrt(5))
    sym = delayq.integrate("constant-delay", p5, history=(1.5, 1.5), t_end=60.0)
    worst = max(abs(q1 - q2) for (q1, q2) in sym.states())
    print(f"  symmetric run max|q1-q2| = {worst:.2e}")
    assert worst < 1e-12

    traj = delayq.integrate("constant-delay", p5, history=(1.0, 2.0))
    verdict = delayq.classify(traj, p5)["verdict"]
    print(f"  fig-5 setup verdict: {verdict}")
    assert verdict == "Converging"

    mid = traj.sample(0.5 * traj.t_end)
    assert len(mid) == 2 and all(math.isfinite(v) for v in mid)
    assert traj.csv().startswith("t,q1,q2\n")

    m = delayq.mean_infinite_server(2.0, 0.0, p5)
    approx(m, 2.5803351376617587, 1e-12, "mean_infinite_server(t=2)")

    print("smoke test passed")


if __name__ == "__main__":
    main()
