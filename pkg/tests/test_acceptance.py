"""Acceptance criteria A1 to A8, each at its stated tolerance and time limit.

The per-criterion PASS/FAIL lines are printed by the terminal summary hook in
conftest.py.
"""

import math
import time

import numpy as np
import pytest

from cqavwc import cli, coding, families, qmath, symmetrize
from cqavwc.channel import Distribution
from cqavwc.coding import WiretapCodebook, adversarial_error, pgm_decoder, run_secrecy_experiment
from cqavwc.infoquant import holevo_chi, lower_bound_csi, lower_bound_no_csi
from cqavwc.typical import ProductState, projector_mass_checks, spectral_projector
from oracles import grid_oracle, random_family, xor_family

from test_cli import CHANNELS


class Clock:
    def __init__(self, limit):
        self.limit = limit

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.limit, f"took {self.elapsed:.1f} s, limit {self.limit} s"


def test_a1_entropy_and_chi_identities():
    with Clock(1.0):
        for d in range(2, 9):
            assert abs(qmath.von_neumann_entropy(np.eye(d) / d) - math.log2(d)) <= 1e-9
        k0, k1 = families.basis_state(0), families.basis_state(1)
        assert holevo_chi([0.5, 0.5], [k0, k1]) == pytest.approx(1.0, abs=1e-9)
        rho = qmath.random_density(2, np.random.default_rng(1))
        assert holevo_chi([0.3, 0.7], [rho, rho]) == pytest.approx(0.0, abs=1e-9)


def test_a2_lemma_sweeps(capsys):
    import json

    with Clock(10.0):
        for dim in (2, 4):
            code = cli.main(["lemmas", "--dim", str(dim)])
            res = json.loads(capsys.readouterr().out)["results"]
            assert code == 0 and res["all_pass"]
            assert res["gentle_measurement"] == {**res["gentle_measurement"], "trials": 1000, "violations": 0}
            assert res["fannes"]["trials"] == 1000 and res["fannes"]["violations"] == 0


def test_a3_typical_projector_mass():
    mass_bad, rank_bad, sandwich_bad, checks = [], 0, 0, 0
    with Clock(60.0):
        for seed in range(100):
            letter = qmath.random_density(2, np.random.default_rng(seed))
            for n in (4, 8, 12):
                state = ProductState([letter] * n)
                for alpha in (0.25, 0.5, 1.0):
                    rep = projector_mass_checks(state, spectral_projector(state, n, alpha), n, alpha, 2)
                    checks += 1
                    rank_bad += not rep.rank_ok
                    sandwich_bad += not rep.sandwich_ok
                    if not rep.mass_ok:
                        mass_bad.append((seed, n, alpha, round(rep.captured_mass, 4), rep.mass_floor))
    assert checks == 900
    assert rank_bad == 0 and sandwich_bad == 0
    assert mass_bad == [], f"captured mass below floor: {mass_bad}"


def test_a4_symmetrizability():
    with Clock(120.0):
        k0, plus = families.basis_state(0), np.full((2, 2), 0.5, dtype=complex)
        verdict = symmetrize.check_symmetrizable(xor_family(k0, plus))
        assert verdict.symmetrizable and verdict.certificate is not None
        assert symmetrize.verify_symmetrizer(xor_family(k0, plus), verdict.certificate) <= 1e-7

        blind = families.state_blind_channel([k0, plus])
        assert not symmetrize.check_joint(blind).symmetrizable

        rng = np.random.default_rng(2024)
        agree = 0
        for i in range(200):
            fam = random_family(rng, i % 3)
            agree += symmetrize.check_symmetrizable(fam).symmetrizable == grid_oracle(fam)
        assert agree >= 198


def test_a5_bound_sanity():
    with Clock(120.0):
        rep = lower_bound_no_csi(families.orthogonal_constant_channel())
        assert rep.bound_value == pytest.approx(1.0, abs=1e-3)

        xor = families.xor_channel()
        for rep in (lower_bound_no_csi(xor), lower_bound_csi(xor)):
            assert rep.bound_value == 0.0
            assert "(Eq. t3)" in rep.symmetrizability_note

        rng = np.random.default_rng(123)
        bad = []
        for i in range(50):
            ch = families.noisy_eve_channel(rng)
            lo, hi = lower_bound_no_csi(ch).bound_value, lower_bound_csi(ch).bound_value
            if hi < lo - 1e-9:
                bad.append((i, lo, hi))
        assert bad == []


def test_a6_pgm_exactness():
    with Clock(10.0):
        ch = families.orthogonal_constant_channel()
        words = [("0", "0", "1", "1"), ("0", "1", "0", "1"), ("1", "0", "1", "0"), ("1", "1", "0", "0")]
        cb = WiretapCodebook.from_words([[w] for w in words], inputs=ch.inputs)
        dec = pgm_decoder(ch, cb)
        worst, _, _ = adversarial_error(ch, cb, dec)
        assert abs(worst) <= 1e-9
        assert dec.completeness_defect() <= coding.POVM_TOL

        rep = run_secrecy_experiment(ch, Distribution.uniform(ch.inputs), 4, 4, 1, seed=1)
        assert len(set(rep.codewords)) == 4 and abs(rep.max_error) <= 1e-9


def test_a7_covering_and_leakage_trend():
    ch = families.jammer_channel()
    p = Distribution.uniform(ch.inputs)
    gaps, leaks = {}, {}
    with Clock(600.0):
        for L in (1, 2, 4, 8):
            reps = [run_secrecy_experiment(ch, p, 6, 2, L, seed) for seed in range(50)]
            gaps[L] = float(np.median([r.max_covering_gap for r in reps]))
            leaks[L] = float(np.median([r.max_leakage for r in reps]))
        for seed in range(3):
            rep = run_secrecy_experiment(ch, p, 6, 1, 4, seed)
            assert all(v == 0.0 for v in rep.covering_gap_by_t.values())
    order = (1, 2, 4, 8)
    assert all(gaps[a] >= gaps[b] for a, b in zip(order, order[1:])), gaps
    assert all(leaks[a] >= leaks[b] for a, b in zip(order, order[1:])), leaks


@pytest.mark.parametrize("argv", [
    ["validate", "jammer_qubit.json"],
    ["symmetrize", "xor_symmetrizable.json", "--mode", "joint"],
    ["bound", "jammer_qubit.json", "--mode", "csi"],
    ["simulate", "jammer_qubit.json", "--n", "3", "--L", "2", "--seeds", "2"],
    ["lemmas", "--trials", "100", "--seed", "4"],
], ids=lambda a: a[0])
def test_a8_cli_determinism(argv, capsys):
    argv = [str(CHANNELS / a) if a.endswith(".json") else a for a in argv]
    outputs = []
    for _ in range(2):
        cli.main(argv)
        outputs.append(capsys.readouterr().out.encode())
    assert outputs[0] == outputs[1]
