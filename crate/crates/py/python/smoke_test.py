"""Smoke test for the slqns_py extension.

Build it first, then run this script:

    cargo build --release -p slqns-py --features extension-module
    python3 crates/py/python/smoke_test.py

If the module is not importable the script looks for the freshly built
shared library under target/ and loads it from a temporary directory.
"""

import json
import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[3]


def load_module():
    try:
        import slqns_py

        return slqns_py
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libslqns_py.so"
        if lib.exists():
            tmp = Path(tempfile.mkdtemp())
            shutil.copy(lib, tmp / "slqns_py.so")
            sys.path.insert(0, str(tmp))
            import slqns_py

            return slqns_py
    sys.exit("slqns_py not built; run: cargo build -p slqns-py --features extension-module")


def main():
    m = load_module()
    print("slqns_py", m.__version__)

    # forward model and single-time inversion agree without SPAM
    s_plus, s_minus, t = 0.05, 0.02, 12.0
    e_plus = m.single_axis_model(s_plus, s_minus, t, plus=True)
    e_minus = m.single_axis_model(s_plus, s_minus, t, plus=False)
    got = m.invert_single_axis(e_plus, e_minus, t)
    assert math.isclose(got[0], s_plus, rel_tol=1e-10), got
    assert math.isclose(got[1], s_minus, rel_tol=1e-10), got

    peak = m.lorentzian([4.0, -4.0, 0.0], 4.0, 0.5, 2.0)
    assert peak[0] == 2.0 and peak[1] == 2.0 and peak[2] < 2.0, peak

    text = m.bundled_config("fig2-dephasing")
    m.validate_config(text)
    bad = json.loads(text)
    bad["spam"]["delta"] = 0.5
    try:
        m.validate_config(json.dumps(bad))
    except ValueError as e:
        assert "alpha_M + delta" in str(e), e
    else:
        raise AssertionError("invalid SPAM accepted")

    with tempfile.TemporaryDirectory() as out:
        report = json.loads(m.run_campaign(text, out, seed=3))
        assert len(report["estimates"]) == 20, len(report["estimates"])
        assert (Path(out) / "estimates.csv").exists()
        same = m.compare(json.dumps(report), json.dumps(report))
        assert same and all(row[5] == 0.0 for row in same)
    print("smoke test passed")


if __name__ == "__main__":
    main()
