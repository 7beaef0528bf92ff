"""Smoke test for the Python bindings.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml`
or `pip install crates/py`.
"""

import math

import catamp_py as ca


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    # unit gain: perfect fringe
    cfg = ca.ExperimentConfig(2.0, 1.0)
    sweep = ca.visibility_sweep(cfg, 64)
    assert len(sweep["theta"]) == 64
    assert close(sweep["visibility"], 1.0, 1e-6)
    for t, p in zip(sweep["theta"], sweep["probability"]):
        assert close(p, 0.5 * math.cos(t / 2) ** 2, 1e-6)

    # amplified visibility against the closed form
    cfg = ca.ExperimentConfig(1.0, 1.5)
    v = ca.visibility_sweep(cfg)["visibility"]
    assert close(v, ca.visibility_closed_form(1.5, 1.0), 1e-3)
    assert close(ca.visibility_closed_form(1.5, 1.0), 0.13987, 5e-6)

    # Q-function engine agrees with the Fock engine
    cfg = ca.ExperimentConfig(1.0, 1.25, theta=0.7)
    assert close(ca.q_probability(cfg), ca.accepted_probability(cfg), 1e-6)
    assert ca.q_value(cfg, 1.0 + 0.5j, -0.3j) >= 0.0

    # squeezed vacuum
    s = ca.TwoModeState.vacuum((40, 40)).squeeze(math.cosh(0.5))
    assert close(s.mean_photon("signal"), math.sinh(0.5) ** 2, 1e-6)
    oracle = ca.squeeze_oracle(ca.TwoModeState.vacuum((12, 12)), 0.3)
    fast = ca.TwoModeState.vacuum((12, 12)).squeeze(math.cosh(0.3))
    err = max(
        abs(a - b)
        for ra, rb in zip(oracle.amplitudes(), fast.amplitudes())
        for a, b in zip(ra, rb)
    )
    assert err < 1e-8

    # mean-field idler displacement
    coh = ca.TwoModeState.coherent(2.0, (49, 49)).squeeze(1.25)
    q = coh.quadrature_moment(1, mode="idler")
    assert close(q, -math.sqrt(1.25**2 - 1) * math.sqrt(2) * 2.0, 1e-4)

    # variance audit flags the linear-response prediction
    rep = ca.variance_report(ca.ExperimentConfig(4j, 1.1, phi=math.pi / 4))
    assert rep["disagreement"]

    try:
        ca.ExperimentConfig(1.0, 0.5)
    except ValueError as e:
        assert "g must be" in str(e)
    else:
        raise AssertionError("g < 1 accepted")

    checks = ca.run_checks(["eq5", "tmsv"])
    assert all(checks.values()), checks
    print("python smoke test passed")


if __name__ == "__main__":
    main()
