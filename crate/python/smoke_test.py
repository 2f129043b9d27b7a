"""Smoke test for the `tpa` extension module.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml --release`.
"""

import math

import tpa


def close(a, b, rel=1e-6):
    return abs(a - b) <= rel * abs(b)


def main():
    coh = tpa.ProbeSpec.coherent(4.0)
    loss = tpa.LossSpec(0.5)
    assert close(coh.incident_photons(), 4.0)

    amps = tpa.make_probe_state(coh)
    pops = [abs(c) ** 2 for c in amps]
    assert close(sum(pops), 1.0, 1e-9)
    assert close(pops[2], math.exp(-4.0) * 16.0 / 2.0, 1e-9)

    s = tpa.sensitivity(coh, loss, "photon_number")
    assert close(s, 1.0 / (0.5 * 64.0))
    assert close(tpa.sensitivity(coh, loss, "photon_number", analytic=True), s)

    sv = tpa.ProbeSpec.squeezed_vacuum(1.0)
    assert tpa.sensitivity(sv, tpa.LossSpec(), "quad_q") is None
    assert close(tpa.sensitivity(sv, tpa.LossSpec(), "n"), 0.25)

    fi = tpa.fisher(tpa.ProbeSpec.coherent(10.0), loss, "photon_number")
    assert close(fi, 0.5 * 1000.0 + 0.25 * 100.0 / 2.0, 1e-6)

    rows = tpa.limit_table(1.0, 100.0, 0.5, math.pi / 4)
    assert len(rows) == 10 and close(rows[1]["value"], 1.0 / (0.5 * 1e6))

    try:
        tpa.LossSpec(1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("eta > 1 accepted")

    passed, checks = tpa.validate(eta=1.0)
    assert passed, [c for c in checks if c[1] == "fail"]
    assert any(status == "not_applicable" for _, status, _ in checks)
    print("smoke test passed:", len(checks), "checks")


if __name__ == "__main__":
    main()
