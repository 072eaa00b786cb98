import json
import math

import numpy as np
import pytest

import rollwave


def test_period_anchor():
    assert rollwave.period_of_k(0.9421) == pytest.approx(8.436, abs=1e-3)
    assert rollwave.k_of_period(rollwave.period_of_k(0.7)) == pytest.approx(0.7, abs=1e-9)


def test_bad_modulus_raises():
    with pytest.raises(ValueError):
        rollwave.period_of_k(1.5)


@pytest.fixture(scope="module")
def wave():
    return rollwave.solve_profile(F=math.sqrt(6.0), nu=0.1, q=1.5745, X=17.15)


def test_profile(wave):
    assert wave.residual_norm <= 1e-8
    assert wave.amplitude > 0.1
    assert isinstance(wave.tau, np.ndarray)
    assert wave.tau.shape == (wave.n,)
    back = rollwave.WaveProfile.from_json(wave.to_json())
    assert np.array_equal(back.tau, wave.tau)


def test_hill_conjugation(wave):
    spectra = rollwave.hill_spectrum(wave, modes=21, xi_points=4)
    assert len(spectra) == 4
    assert spectra[0][0] == pytest.approx(-math.pi / wave.params.X)
    (xm, lm), (xp, lp) = spectra[1], spectra[3]
    assert xm == pytest.approx(-xp)
    assert len(lm) == len(lp) == 42
    for z in lm:
        assert min(abs(z.conjugate() - w) for w in lp) < 1e-10 * max(1.0, abs(z))


def test_verdict_without_evans(wave):
    v = rollwave.verdict(wave, modes=41, xi_points=11, use_evans=False)
    assert v["overall"] in {"stable", "unstable", "indeterminate"}
    assert v["D1"]["holds"] is not False


def test_cli_roundtrip():
    code, out, err = rollwave.run_cli(["kdv", "--k", "0.5"])
    assert code == 0
    assert json.loads(out)["k"] == 0.5
    assert rollwave.run_cli(["kdv", "--k", "2"])[0] == 1
