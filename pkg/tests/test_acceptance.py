"""Acceptance criteria 1-10, one PASS/FAIL line each.

Counts and tolerances are pinned here rather than read from the package
defaults, so a change to the defaults cannot loosen the acceptance run.
Run ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""
import json
import os
import sys
import tempfile
import time

from rkbslab.cli import EXIT_OK, main
from rkbslab.suites import SUITES, run_suite

COUNTS = {"decomposition": 200, "compatibility": 100, "kernel": 100, "inclusion": 100,
          "reformulation": 50, "representer": 50, "threshold": 20, "oracle": 50, "isometry": 200}
TOL = {
    "decomposition": 1e-6, "compatibility": 1e-6, "kernel": 1e-8, "sum_kernel": 1e-6,
    "inclusion": 1e-8, "reformulation": 1e-6, "block_reformulation": 1e-6,
    "representer_atoms": 0.0, "representer_fitted": 1e-8, "representer_kkt": 1e-4,
    "representer_strategies": 1e-5, "threshold": 0.0, "oracle": 1e-8, "spectrum": 1e-8,
    "isometry": 1e-12, "round_trip": 1e-12,
}
DECOMPOSITION_SECONDS = 60.0


def _reports(name):
    return {r.suite: r for r in run_suite(name, COUNTS[name], 0, TOL)}


def _check(reports, expect_count=None):
    parts, ok = [], True
    for name, rep in reports.items():
        ok &= rep.passed and rep.tolerance == TOL.get(name, TOL.get(name.split("_p")[0]))
        if expect_count is not None:
            ok &= len({row["seed"] for row in rep.instances}) == expect_count
        parts.append(f"{name} max_err={rep.max_rel_err:.3g} tol={rep.tolerance:g}")
    return bool(ok), "; ".join(parts)


def criterion_1():
    t0 = time.perf_counter()
    reps = _reports("decomposition")
    elapsed = time.perf_counter() - t0
    ok, detail = _check(reps, COUNTS["decomposition"])
    return ok and elapsed < DECOMPOSITION_SECONDS, f"{detail}; runtime {elapsed:.1f}s < {DECOMPOSITION_SECONDS:g}s"


def criterion_2():
    reps = _reports("compatibility")
    ok = set(reps) == {"compatibility_p1", "compatibility_p2"}
    good, detail = _check(reps, COUNTS["compatibility"])
    return ok and good, detail


def criterion_3():
    reps = _reports("kernel")
    good, detail = _check(reps, COUNTS["kernel"])
    return good and set(reps) == {"kernel", "sum_kernel"}, detail


def criterion_4():
    reps = _reports("inclusion")
    good, detail = _check(reps, COUNTS["inclusion"])
    rows = reps["inclusion"].instances
    # every instance carries the whole-grid pnorm comparison
    pn = {r["seed"] for r in rows if r.get("link") == "pnorm_l1<=l2"}
    good &= len(pn) == COUNTS["inclusion"]
    return good, f"{detail}; pnorm rows on {len(pn)} instances"


def criterion_5():
    reps = _reports("reformulation")
    good, detail = _check(reps, COUNTS["reformulation"])
    checks = {(r["seed"], r["check"]) for rep in reps.values() for r in rep.instances if "check" in r}
    good &= {c for _, c in checks} == {"optimum", "transfer"}
    return good and set(reps) == {"reformulation", "block_reformulation"}, detail


def criterion_6():
    reps = _reports("representer")
    return _check(reps, COUNTS["representer"])


def criterion_7():
    return _check(_reports("threshold"), COUNTS["threshold"])


def criterion_8():
    reps = _reports("oracle")
    return _check(reps, COUNTS["oracle"])


def criterion_9():
    return _check(_reports("isometry"), COUNTS["isometry"])


def criterion_10():
    cfg = {"seed": 11, "suites": list(SUITES), "suite_sizes": COUNTS, "tolerances": TOL}
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "cfg.json")
        with open(path, "w") as fh:
            json.dump(cfg, fh)
        codes = [main(["verify", "--config", path, "--out", os.path.join(tmp, d)]) for d in ("a", "b")]
        names = sorted(os.listdir(os.path.join(tmp, "a")))
        same = names == sorted(os.listdir(os.path.join(tmp, "b")))
        for name in names:
            with open(os.path.join(tmp, "a", name), "rb") as fa, open(os.path.join(tmp, "b", name), "rb") as fb:
                same &= fa.read() == fb.read()
    ok = same and codes == [EXIT_OK, EXIT_OK]
    return ok, f"{len(names)} report files byte-identical={same}, exit codes {codes}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def _line(i, ok, detail):
    return f"ACCEPTANCE criterion {i}: {'PASS' if ok else 'FAIL'} ({detail})"


def _run(i, capsys):
    ok, detail = CRITERIA[i - 1]()
    with capsys.disabled():
        print("\n" + _line(i, ok, detail))
    assert ok, detail


def test_criterion_1_decomposition(capsys):
    _run(1, capsys)


def test_criterion_2_compatibility(capsys):
    _run(2, capsys)


def test_criterion_3_kernel_duality(capsys):
    _run(3, capsys)


def test_criterion_4_inclusion(capsys):
    _run(4, capsys)


def test_criterion_5_reformulation(capsys):
    _run(5, capsys)


def test_criterion_6_representer(capsys):
    _run(6, capsys)


def test_criterion_7_threshold(capsys):
    _run(7, capsys)


def test_criterion_8_oracle(capsys):
    _run(8, capsys)


def test_criterion_9_isometry(capsys):
    _run(9, capsys)


def test_criterion_10_determinism(capsys):
    _run(10, capsys)


if __name__ == "__main__":
    failed = 0
    for i, crit in enumerate(CRITERIA, 1):
        ok, detail = crit()
        failed += not ok
        print(_line(i, ok, detail))
    sys.exit(1 if failed else 0)
