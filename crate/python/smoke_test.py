"""Smoke test for the vnsim_py extension module.

Build and install first, e.g. `pip install ./crates/python --no-build-isolation`.
"""

import json
import math

import vnsim_py as vn


def main():
    s = vn.DensityMatrix.basis(2, 0)
    p = vn.Projector.from_vector([1, 0], "up")
    h = vn.Hamiltonian.preset("rabi(1.0)")

    s1 = vn.evolve(s, h, math.pi / 4)
    assert abs(s1.trace() - 1) < 1e-12
    assert abs(vn.yes_probability(s1, p) - 0.5) < 1e-12
    assert abs(vn.reduce_yes(s1, p).purity() - 1) < 1e-12

    rh = vn.Hamiltonian.preset("rabi(1.5707963267948966)")
    assert abs(vn.zeno_survival(s, rh, p, 1.0, 2) - 0.25) < 1e-12
    assert abs(vn.zeno_survival(s, rh, p, 1.0, 100) - 0.97563) < 1e-5

    survival, fidelity = vn.zeno_drag(200)
    assert survival >= 0.98 and fidelity >= 0.99

    report = vn.hardy_verify("canonical")
    assert max(report["p1_violation"], report["p2_violation"], report["p3_violation"]) <= 1e-12
    assert report["p4_value"] > 0
    assert vn.hardy_lhv("canonical")[1] == 0
    assert vn.hardy_assert("R2") == "HOLDS"
    assert vn.hardy_assert("R1") == "CONTRADICTION"
    _, p4 = vn.optimize_hardy(200)
    assert abs(p4 - (5 * math.sqrt(5) - 11) / 2) < 1e-6

    summary, _ = vn.run(json.dumps({"experiment": "hardy_lhv"}))
    assert summary == "consistent_with_p4: 0", summary

    print("smoke test passed")


if __name__ == "__main__":
    main()
