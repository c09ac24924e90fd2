"""Acceptance suite: one test per shipped guarantee, run at full strength
from the bundled configs.

Each test prints a single "criterion N (...): PASS/FAIL" line (visible with
-s or -rA; the per-test verdicts in -v output mirror them one to one).
"""

from pathlib import Path

from sqcomm import load_config, report_csv_bytes, report_json_bytes, run

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def _run_criterion(num, label, config_name, runtime_cap=None):
    report = run(load_config(CONFIG_DIR / config_name))
    ok = report.all_passed
    if runtime_cap is not None:
        ok = ok and report.wall_clock_s < runtime_cap
    bad = "; ".join(f"{c.name}: {c.detail}" for c in report.checks if not c.passed)
    print(
        f"criterion {num} ({label}): {'PASS' if ok else 'FAIL'} — "
        f"{len(report.checks)} checks, {report.trials} trials, "
        f"{report.wall_clock_s:.2f}s" + (f" [{bad}]" if bad else "")
    )
    assert report.all_passed, bad
    if runtime_cap is not None:
        assert report.wall_clock_s < runtime_cap, (
            f"{report.wall_clock_s:.2f}s over the {runtime_cap}s budget"
        )
    return report


def test_criterion_1_protocol_exactness():
    # every stacked-access law vs the centralized one, 50 random partitions
    _run_criterion(1, "protocol exactness", "01_protocol_exactness.json",
                   runtime_cap=10.0)


def test_criterion_2_bit_cost_law():
    report = _run_criterion(2, "bit-cost linearity", "02_bit_fit.json",
                            runtime_cap=30.0)
    assert report.fit is not None
    assert 0.0 <= report.fit["c0"] <= 4.0
    assert 0.0 <= report.fit["c1"] <= 4.0
    assert report.fit["r_squared"] > 0.999


def test_criterion_3_oversampling():
    _run_criterion(3, "oversampled access", "03_oversampling.json",
                   runtime_cap=30.0)


def test_criterion_4_sparse_regression():
    report = _run_criterion(4, "sparse regression decision",
                            "04_sparse_regression.json", runtime_cap=60.0)
    assert report.accuracy is not None and report.accuracy >= 0.99


def test_criterion_5_dense_regression():
    _run_criterion(5, "dense regression law", "05_dense_regression.json")


def test_criterion_6_clustering():
    report = _run_criterion(6, "clustering separation", "06_clustering.json")
    assert report.accuracy == 1.0


def test_criterion_7_pca_recsys():
    _run_criterion(7, "spectral decisions", "07_pca_recsys.json")


def test_criterion_8_hamiltonian():
    _run_criterion(8, "evolution identity", "08_hamiltonian.json")


def test_criterion_9_determinism():
    outcomes = []
    for name in ("09_oracle.json", "06_clustering.json"):
        config = load_config(CONFIG_DIR / name)
        first, second = run(config), run(config)
        same = (report_json_bytes(first) == report_json_bytes(second)
                and report_csv_bytes(first) == report_csv_bytes(second))
        outcomes.append(same)
    ok = all(outcomes)
    print(f"criterion 9 (byte-identical reruns): {'PASS' if ok else 'FAIL'} — "
          f"2 configs, JSON and CSV compared")
    assert ok
