"""Acceptance gate: one test per criterion, each printing a PASS/FAIL
line.  Criteria whose stated oracle values could not be reproduced from
any internally consistent reading of the estimators are implemented
faithfully and left failing; the analysis lives in the project notes,
outside the package.
"""

import numpy as np

import misstab as mt
from misstab import likelihood as lk
from test_estimators import MAR_Y3_EXPECTED, MODEL11_EXPECTED


def _report(number, ok, capfd):
    with capfd.disabled():
        print(f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'}")
    assert ok


def test_acceptance_1_parameter_anchors(table5, table8, capfd):
    ok = True
    nmar = mt.fit(table5, mt.parse_model_text("Y1:self", table5))
    ok &= np.allclose(nmar.params.odds[0], [0.0721, 0.0258], atol=5e-4)
    best = mt.fit(table8, mt.parse_model_text("Y1:Y2,Y2:self", table8))
    ok &= np.allclose(best.params.odds[1], [0.073, 2.375], atol=1e-3)
    ok &= abs(best.params.pair[(0, 1)] - 1.9507) <= 5e-4
    phi12 = [mt.conditional_missing_prob(best, "Y1", {"Y2": j})
             for j in (1, 2)]
    phi21 = [mt.conditional_missing_prob(best, "Y2", {"Y2": j})
             for j in (1, 2)]
    ok &= np.allclose(phi12, [0.0606, 0.0882], atol=5e-4)
    ok &= np.allclose(phi21, [0.068, 0.7037], atol=5e-4)
    _report(1, ok, capfd)


def test_acceptance_2_expected_tables(table5, table8, capfd):
    ok = True
    mar = mt.fit(table5, mt.parse_model_text("Y1:Y3", table5))
    for pattern, want in MAR_Y3_EXPECTED.items():
        got = mar.expected[pattern]
        # One printed cell (66.93) disagrees with its own row margin;
        # the reproduced value is 66.88.
        ok &= np.allclose(got, want, atol=0.02)
    best = mt.fit(table8, mt.parse_model_text("Y1:Y2,Y2:self", table8))
    for pattern, want in MODEL11_EXPECTED.items():
        ok &= np.allclose(best.expected[pattern], want, atol=0.02)
    _report(2, ok, capfd)


def test_acceptance_3_odds_ratio_anchors(table8, capfd):
    best = mt.fit(table8, mt.parse_model_text("Y1:Y2,Y2:self", table8))
    est1 = mt.marginal_odds_ratio(best, fixed={"Y3": 1})
    est2 = mt.marginal_odds_ratio(best, fixed={"Y3": 2})
    ok = abs(est1.value - 6.5957) <= 1e-3
    ok &= abs(est2.value - 0.8235) <= 1e-3
    ok &= abs(est1.variance - 11.9646) <= 5e-3
    ok &= abs(est2.variance - 0.4823) <= 1e-3
    _report(3, ok, capfd)


def test_acceptance_4_model_selection(table5, table8, capfd):
    report5 = mt.compare_models(table5)
    report8 = mt.compare_models(table8)
    ok = report5.best.to_text(table5) == "Y1:Y3"
    ok &= not any(row.boundary for row in report5.rows)
    ok &= not any(row.boundary for row in report8.rows)
    mcar_g2 = next(r.g2 for r in report5.rows if r.label == "(a...)")
    ok &= mcar_g2 == max(r.g2 for r in report5.rows)
    # The stated best on the two-missing table cannot be reproduced:
    # under the deviance these estimators define, another model is
    # strictly better, at the closed-form fits and at the EM optima
    # alike.  Asserted faithfully and left failing.
    ok &= report8.best.to_text(table8) == "Y1:Y2,Y2:self"
    _report(4, ok, capfd)


def test_acceptance_5_g2_oracles(table5, table8, capfd):
    ok = True
    want5 = {"Y1:self": 2.62, "Y1:Y2": 2.48, "Y1:Y3": 2.09,
             "Y1:const": 5.06}
    dfs = {"Y1:self": 2, "Y1:Y2": 2, "Y1:Y3": 2, "Y1:const": 3}
    for text, want in want5.items():
        spec = mt.parse_model_text(text, table5)
        gof = mt.g_squared(table5, mt.fit(table5, spec))
        # The stated MCAR value (5.06) is not reproducible: the MCAR
        # closed form is the exact maximizer and yields 2.85.
        ok &= abs(gof.g2 - want) <= 0.05 and gof.df == dfs[text]
    # Closed-form vs EM agreement: holds only where the closed forms
    # are stationary points (the single-missing MAR/MCAR fits and the
    # all-MCAR model); the remaining closed forms are moment-matching
    # conventions sitting measurably below the EM optimum.
    for table in (table5, table8):
        for spec in mt.enumerate_models(table):
            closed = mt.fit(table, spec)
            em = lk.em_fit(table, spec, tol=1e-12)
            ok &= abs(closed.loglik - em.loglik) < 1e-6
    _report(5, ok, capfd)


def test_acceptance_6_property_suites(table8, capfd):
    from test_em import \
        test_em_monotone_and_mass_conserving_on_random_tables
    from test_estimators import (
        test_boundary_one_missing_matches_the_constrained_closed_form,
        test_full_block_reproduced_exactly_without_mcar)
    from test_inference import test_or_invariance_model_list
    from test_linsolve import (
        test_overdetermined_matches_brute_force_least_squares,
        test_underdetermined_matches_min_norm_oracle)
    ok = True
    try:
        test_em_monotone_and_mass_conserving_on_random_tables()      # (a)
        import os
        table4 = mt.load_table(os.path.join(
            os.path.dirname(__file__), "data", "table4.json"))
        test_full_block_reproduced_exactly_without_mcar(table8, table4)  # (b)
        test_or_invariance_model_list(table8)                        # (c)
        test_overdetermined_matches_brute_force_least_squares()      # (d)
        test_underdetermined_matches_min_norm_oracle()               # (d)
        test_boundary_one_missing_matches_the_constrained_closed_form()  # (e)
        # (f) decomposition identities.
        best = mt.fit(table8, mt.parse_model_text("Y1:Y2,Y2:self", table8))
        dec = mt.decompose_loglinear(best)
        extended = np.empty(table8.dims + (2, 2))
        for pattern, mu in best.expected.items():
            extended[(Ellipsis,) + pattern] = mu
        ok &= np.allclose(dec.reconstruct(), np.log(extended), atol=1e-10)
        ok &= abs(np.exp(4 * dec.effects[("R1", "R2")][0, 0])
                  - best.params.pair[(0, 1)]) < 1e-8
        # (g) simulation recovery is exercised per category in
        # tests/test_simulation.py; run one category here.
        from test_simulation import test_recovery_at_large_n
        test_recovery_at_large_n("NMAR+MAR", "Y1:self,Y2:Y1,Y3:Y1")
    except AssertionError:
        ok = False
    _report(6, ok, capfd)


def test_acceptance_7_enumeration(capfd):
    counts = mt.category_counts(3, 3)
    ok = (counts["MCAR"], counts["NMAR"], counts["MAR"],
          counts["MCAR+NMAR"], counts["MCAR+MAR"], counts["NMAR+MAR"],
          counts["NMAR+MAR+MCAR"]) == (1, 1, 8, 6, 18, 18, 12)
    for n in range(1, 7):
        for k in range(1, n + 1):
            ok &= sum(mt.category_counts(n, k).values()) == (n + 1) ** k
    _report(7, ok, capfd)
