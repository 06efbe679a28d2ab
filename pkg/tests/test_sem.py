import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from latentfit.model import (COVARIANCE, DIRECTED, PathSpec, SemModel, load_model,
                             parse_measurement, parse_ram)
from latentfit.optimize import num_grad
from latentfit.sem import (Discrepancy, ParamRow, ParamTable, RamLayout, SemError, baseline_model,
                           fit_ml, implied_moments, path_tests, simulate, start_values)
from conftest import DATA

TWO_FACTOR = "F1 =~ X1 + X2 + X3\nF2 =~ X4 + X5 + X6"
TRUE_LOADINGS = np.array([0.8, 0.7, 0.6, 0.8, 0.7, 0.6])


def two_factor_sigma():
    lam = np.zeros((6, 2))
    lam[:3, 0] = TRUE_LOADINGS[:3]
    lam[3:, 1] = TRUE_LOADINGS[3:]
    phi = np.array([[1.0, 0.3], [0.3, 1.0]])
    sig = lam @ phi @ lam.T
    return sig + np.diag(1 - np.diag(sig))


def sample_cov(seed, n=2000):
    x = np.random.default_rng(seed).multivariate_normal(np.zeros(6), two_factor_sigma(), n)
    return np.cov(x, rowvar=False), x.mean(axis=0)


def saturated(names):
    ps = [PathSpec(COVARIANCE, a, b, label=f"s_{a}_{b}")
          for i, a in enumerate(names) for b in names[i:]]
    return SemModel(tuple(names), (), tuple(ps))


class TestImplied:
    def test_one_factor_hand_expansion(self):
        m = parse_ram("F -> a, l1, NA\nF -> b, l2, NA\na <-> a, e1, NA\nb <-> b, e2, NA\nF <-> F, NA, 1")
        l1, l2, e1, e2 = 0.9, 0.6, 0.3, 0.5
        sig, mu = implied_moments(m, [l1, l2, e1, e2])
        np.testing.assert_allclose(sig, [[l1 ** 2 + e1, l1 * l2], [l1 * l2, l2 ** 2 + e2]])
        assert mu is None

    def test_zero_loadings_give_diagonal(self):
        m = parse_measurement(TWO_FACTOR, std_lv=True)
        theta = start_values(m, np.eye(6))
        theta[:6] = 0.0
        sig, _ = implied_moments(m, theta)
        np.testing.assert_allclose(sig, np.diag(theta[6:12]))

    def test_means(self):
        m = parse_measurement("F =~ a + b", std_lv=True, meanstructure=True)
        theta = np.array([1.0, 1.0, 1.0, 1.0, 2.5, -1.0])
        assert list(implied_moments(m, theta)[1]) == [2.5, -1.0]

    def test_wrong_length(self):
        with pytest.raises(SemError, match="free parameters"):
            implied_moments(parse_measurement(TWO_FACTOR), np.ones(3))

    def test_singular_cycle(self):
        m = parse_ram("x -> y, b1, NA\ny -> x, b2, NA\nx <-> x, vx, NA\ny <-> y, vy, NA",
                      observed=["x", "y"])
        with pytest.raises(SemError, match="singular"):
            implied_moments(m, [1.0, 1.0, 1.0, 1.0])

    def test_structural_model_symbolic_oracle(self):
        """Expand the four-factor structural graph by substitution and compare."""
        m = load_model(DATA / "structural.ram", "ram")
        rng = np.random.default_rng(11)
        theta = rng.uniform(0.2, 1.2, size=m.n_free)
        value = {ps.label: v for ps, v in zip(m.free_params, theta)}
        b = {k: sp.Symbol(k) for k in ("F1F2DIR", "F1F3DIR", "F1F4DIR", "F2F3DIR", "F2F4DIR", "F3F4DIR")}
        z = sp.symbols("z1:5")
        f1 = z[0]
        f2 = b["F1F2DIR"] * f1 + z[1]
        f3 = b["F1F3DIR"] * f1 + b["F2F3DIR"] * f2 + z[2]
        f4 = b["F1F4DIR"] * f1 + b["F2F4DIR"] * f2 + b["F3F4DIR"] * f3 + z[3]

        def cov(u, v):
            # disturbances are independent with unit variance
            pu, pv = sp.Poly(sp.expand(u), *z), sp.Poly(sp.expand(v), *z)
            return sum(pu.coeff_monomial(zi) * pv.coeff_monomial(zi) for zi in z)

        subs = {b[k]: value[k] for k in b}
        assert float(cov(f2, f2).subs(subs)) == pytest.approx(value["F1F2DIR"] ** 2 + 1)
        sig, _ = implied_moments(m, theta)
        obs = {nm: i for i, nm in enumerate(m.observed)}
        # Q1 on F1, Q10 on F2, Q15 on F3, Q21 on F4
        picks = (("Q1", f1, "lam1"), ("Q10", f2, "lam10"), ("Q15", f3, "lam15"), ("Q21", f4, "lam21"))
        for qa, fa, la in picks:
            for qb, fb, lb in picks:
                expect = value[la] * value[lb] * float(cov(fa, fb).subs(subs))
                if qa == qb:
                    expect += value["e" + la[3:]]
                assert sig[obs[qa], obs[qb]] == pytest.approx(expect, rel=1e-12)


class TestDiscrepancy:
    def test_zero_at_truth_and_positive_elsewhere(self):
        m = parse_measurement(TWO_FACTOR, std_lv=True)
        s = two_factor_sigma()
        f = Discrepancy(RamLayout(m), s)
        truth = np.concatenate([TRUE_LOADINGS, 1 - TRUE_LOADINGS ** 2, [0.3]])
        assert f(truth) == pytest.approx(0.0, abs=1e-12)
        assert f(truth * 1.1) > 0

    def test_not_pd_is_inf(self):
        m = parse_measurement(TWO_FACTOR, std_lv=True)
        f = Discrepancy(RamLayout(m), two_factor_sigma())
        theta = np.concatenate([TRUE_LOADINGS, -np.ones(6), [0.3]])
        assert f(theta) == np.inf

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_non_negative(self, seed):
        m = parse_measurement(TWO_FACTOR, std_lv=True)
        s, _ = sample_cov(seed % 50, n=300)
        theta = np.random.default_rng(seed).uniform(0.1, 1.5, size=m.n_free)
        theta[-1] = 0.0
        assert Discrepancy(RamLayout(m), s)(theta) >= -1e-12


class TestFit:
    def test_saturated(self):
        s, _ = sample_cov(0, n=100)
        fit = fit_ml(saturated([f"X{i}" for i in range(1, 7)]), s, 100)
        assert fit.df == 0 and fit.discrepancy < 1e-10 and fit.chisq < 1e-7
        np.testing.assert_allclose(fit.implied_cov, s, atol=1e-5)

    def test_recovery_and_optimality(self):
        s, _ = sample_cov(1)
        m = parse_measurement(TWO_FACTOR, std_lv=True)
        fit = fit_ml(m, s, 2000)
        assert fit.converged and fit.grad_max < 1e-4
        np.testing.assert_allclose(fit.theta[:6], TRUE_LOADINGS, atol=0.06)
        g = num_grad(Discrepancy(RamLayout(m), s), fit.theta)
        assert np.max(np.abs(g)) < 1e-4
        np.testing.assert_allclose(np.linalg.eigvalsh(fit.implied_cov) > 0, True)

    def test_chisq_scaling_in_n(self):
        s, _ = sample_cov(2, n=500)
        m = parse_measurement(TWO_FACTOR, std_lv=True)
        a = fit_ml(m, s, 500, compute_se=False)
        b = fit_ml(m, s, 1001, compute_se=False)
        assert a.chisq / 499 == pytest.approx(b.chisq / 1000, rel=1e-9)

    def test_meanstructure_multiplier(self):
        s, xbar = sample_cov(3, n=400)
        m = parse_measurement(TWO_FACTOR, std_lv=True, meanstructure=True)
        fit = fit_ml(m, s, 400, means=xbar)
        assert fit.chisq == pytest.approx(400 * fit.discrepancy)
        np.testing.assert_allclose(fit.implied_means, xbar, atol=1e-5)
        assert fit.df == 8

    def test_name_alignment(self):
        s, _ = sample_cov(4, n=300)
        m = parse_measurement(TWO_FACTOR, std_lv=True)
        order = [5, 3, 1, 0, 2, 4]
        names = [f"X{i + 1}" for i in order]
        a = fit_ml(m, s, 300, compute_se=False)
        b = fit_ml(m, s[np.ix_(order, order)], 300, names=names, compute_se=False)
        assert a.chisq == pytest.approx(b.chisq, rel=1e-8)

    def test_missing_variable(self):
        with pytest.raises(SemError, match="missing from the data"):
            fit_ml(parse_measurement(TWO_FACTOR), np.eye(2), 100, names=["X1", "X2"])

    def test_standard_errors_against_reference_formula(self):
        # one-factor, three indicators: just identified, so use a marker model on 4 items
        rng = np.random.default_rng(8)
        x = rng.multivariate_normal(np.zeros(4), 0.5 * np.ones((4, 4)) + 0.5 * np.eye(4), 5000)
        s = np.cov(x, rowvar=False)
        fit = fit_ml(parse_measurement("F =~ a + b + c + d", std_lv=True), s, 5000)
        se = fit.std_err[:4]
        # asymptotic SE of a 0.707 loading at n=5000 is about 0.013
        assert np.all((se > 0.008) & (se < 0.02))
        for row in fit.param_table.free_rows():
            assert row.z == pytest.approx(row.estimate / row.std_err)

    def test_param_table_ops(self):
        m = load_model(DATA / "structural.ram", "ram")
        rng = np.random.default_rng(0)
        d = simulate(m, rng.uniform(0.3, 0.8, m.n_free), 500, rng)
        fit = fit_ml(m, np.cov(d.rows, rowvar=False), 500)
        ops = {(r.lhs, r.op, r.rhs) for r in fit.param_table}
        assert ("F1", "=~", "Q1") in ops and ("F2", "~", "F1") in ops and ("F1", "~~", "F1") in ops
        fixed = [r for r in fit.param_table if r.fixed]
        assert len(fixed) == 4 and all(r.std_err is None for r in fixed)
        assert "Q1 <--- F1" in fit.param_table.to_text()
        assert len(path_tests(fit.param_table)) == 6


class TestRestarts:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_perturbed_starts_agree(self, seed):
        s, _ = sample_cov(seed)
        m = parse_measurement(TWO_FACTOR, std_lv=True)
        base = fit_ml(m, s, 2000, compute_se=False)
        rng = np.random.default_rng(100 + seed)
        for _ in range(5):
            start = base.theta * (1 + rng.uniform(-0.2, 0.2, size=base.theta.size))
            alt = fit_ml(m, s, 2000, start=start, compute_se=False)
            assert alt.converged and alt.grad_max < 1e-4
            assert alt.discrepancy == pytest.approx(base.discrepancy, abs=1e-6)


class TestBaseline:
    def test_counts(self):
        m = parse_measurement("F =~ a + b", std_lv=True)
        assert baseline_model(m).df == 1
        assert baseline_model(parse_measurement("F =~ a + b", meanstructure=True)).n_free == 4

    def test_fit_is_log_det_ratio(self):
        s, _ = sample_cov(5, n=300)
        fit = fit_ml(baseline_model(parse_measurement(TWO_FACTOR)), s, 300, compute_se=False)
        expect = np.sum(np.log(np.diag(s))) - np.linalg.slogdet(s)[1]
        assert fit.discrepancy == pytest.approx(expect, abs=1e-8)


class TestPathTests:
    def _table(self, rows):
        return ParamTable(tuple(ParamRow.tested(lbl, to, "~", frm, est, se) for lbl, frm, to, est, se in rows))

    def test_verdicts(self):
        pt = self._table([("b1", "A", "B", 0.5, 0.1), ("b2", "A", "C", 0.0, 0.2),
                          ("b3", "B", "C", 0.0986, 0.05)])
        v = {x.label: x for x in path_tests(pt)}
        assert v["b1"].significant and not v["b1"].borderline
        assert v["b2"].p == 1.0 and not v["b2"].significant
        assert v["b3"].borderline

    def test_alpha_boundary_is_strict(self):
        pt = self._table([("b", "A", "B", 1.959963984540054, 1.0)])
        v = path_tests(pt, alpha=0.05)[0]
        assert v.p == pytest.approx(0.05, abs=1e-12)
        assert v.significant == (v.p < 0.05)

    def test_only_regressions(self):
        pt = ParamTable((ParamRow.tested("l", "F", "=~", "x", 1.0, 0.1),
                         ParamRow.tested("b", "G", "~", "F", 1.0, 0.1)))
        assert [v.label for v in path_tests(pt)] == ["b"]
