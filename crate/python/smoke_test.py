#!/usr/bin/env python3
"""Smoke test for the frobkp_py extension module.

The module is a plain cargo cdylib (no Python packaging tooling is assumed);
build it first with:

    cargo build -p frobkp-py

The script then copies the shared library next to itself under the importable
name and exercises the main entry points.
"""

import pathlib
import shutil
import sys

HERE = pathlib.Path(__file__).resolve().parent
ROOT = HERE.parent


def locate_extension() -> pathlib.Path:
    candidates = [
        ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libfrobkp_py.so", "frobkp_py.dll", "libfrobkp_py.dylib")
    ]
    for cand in candidates:
        if cand.exists():
            return cand
    sys.exit("extension not built: run `cargo build -p frobkp-py` first")


def main() -> None:
    src = locate_extension()
    dest = HERE / ("frobkp_py" + (".so" if src.suffix != ".dll" else ".pyd"))
    if not dest.exists() or src.stat().st_mtime > dest.stat().st_mtime:
        shutil.copy2(src, dest)
    sys.path.insert(0, str(HERE))
    import frobkp_py as fk

    checks = 0

    def expect(cond, label):
        nonlocal checks
        if not cond:
            sys.exit(f"FAIL: {label}")
        checks += 1
        print(f"ok  {label}")

    # algebra construction and arithmetic
    alg = fk.Algebra("zn:2:1")
    expect(alg.dim == 2, "dim")
    expect(alg.check(), "axioms")
    expect(alg.multiply(["0", "1"], ["0", "1"]) == ["0", "0"], "nilpotent square")
    expect(alg.trace(["3", "5"]) == "5", "trace weights (0, 1)")
    expect(alg.gram()[0] == ["0", "1"], "gram row")

    round_trip = fk.Algebra.from_json(alg.to_json())
    expect(round_trip.dim == 2 and round_trip.check(), "json round trip")

    # hierarchy derivations
    flow = fk.kp_flow(alg, 2, depth=4)
    expect("U1" in flow and "t2" in flow, "second flow text")
    expect(len(fk.kp_equation(alg)) == 2, "master equation components")
    expect(fk.verify_kp(alg), "flow/master-equation identity")
    expect(fk.zero_curvature(alg, 2, 3, depth=5), "zero curvature (2,3)")

    gd = fk.gd_flow(alg, 2, 3)
    expect("V0" in gd, "reduced flow text")
    expect(fk.verify_ckdv(alg), "coupled KdV reduction")

    # Hamiltonian structures
    expect(fk.verify_dirac(alg, 2), "constrained gradient completion")
    relations = fk.walgebra(fk.Algebra("scalar"))
    expect(len(relations) == 3 and all(r[3] for r in relations), "W-structure")

    ok, report = fk.verify_bihamiltonian(alg, 2, 3)
    expect(ok and '"status": "pass"' in report, "bi-Hamiltonian identity")

    # dispersionless twin
    expect(all(p for _, p in fk.dkp_limit(alg, 2)), "dispersionless limit")

    # numeric soliton
    res = fk.soliton_max_residual(alg, 1.0, 1.0, -2.0, 2.0, 5)
    expect(res <= 1e-9, f"soliton residual {res:.2e}")
    rows = fk.soliton_grid(alg, 1.0, 1.0, -1.0, 1.0, 3)
    expect(len(rows) == 9 and len(rows[0][2]) == 2, "soliton grid shape")

    print(f"smoke test passed ({checks} checks)")


if __name__ == "__main__":
    main()
