#include <doctest.h>

#include <cmath>
#include <random>

#include <gausskern/errors.hpp>
#include <gausskern/oracle.hpp>
#include <gausskern/solver.hpp>

using namespace gausskern;

namespace {

Term gaussian(double c, double q, Vec center = Vec::Zero(3))
{
    return make_gaussian(c, std::move(center), Prec::identity(1, q));
}

Expansion single(double q = 1)
{
    Expansion e(1);
    e.push_back(gaussian(1.0, q));
    return e;
}

// terms with H^1 norms 1, 1/2, 1/4, ... in scrambled order
Expansion geometric(int n)
{
    Expansion e(1);
    for (int j = 0; j < n; ++j) {
        int p = (j * 5) % n;
        Vec c = Vec::Zero(3);
        c(0) = 0.3 * j;
        Term t = gaussian(1.0, 0.5 + 0.2 * j, c);
        t.coeff = std::ldexp(1.0, -p) / term_norm(t, 1);
        e.push_back(t);
    }
    return e;
}

OperatorConfig admissible_cfg(double r, int k_lo = 0, int k_hi = -1)
{
    OperatorConfig c;
    c.k_lo = k_lo;
    c.k_hi = k_hi;
    c.gamma = select_gamma(c, hydrogen_like(1.0), r).gamma;
    return c;
}

} // namespace

TEST_CASE("approximation schedule")
{
    SUBCASE("single term")
    {
        Expansion f = single();
        double nf = sobolev_norm(f, 1);
        auto s = build_schedule(f, 1.0, 1e-3);
        CHECK(s.count(nf * 1.0001) == 0);
        CHECK(s.count(nf) == 0);
        CHECK(s.count(nf * 0.999) == 1);
        CHECK(s.count(1e-12) == 1);
        CHECK(s.kappa == doctest::Approx(nf).epsilon(1e-12));
    }

    SUBCASE("geometric norms")
    {
        Expansion f = geometric(12);
        for (double r : {0.5, 1.0, 2.0}) {
            auto s = build_schedule(f, r, 1e-3);
            for (std::size_t j = 1; j < s.size(); ++j) {
                CHECK(term_norm(s.terms[j - 1], 1) >= term_norm(s.terms[j], 1));
                CHECK(s.thresholds[j - 1] >= s.thresholds[j]);
            }
            for (double eps = 1e-4; eps < 4; eps *= 1.37) {
                int n = s.count(eps);
                CHECK(n <= 1 + std::log2(2 / eps) + 1e-12);
                if (eps >= s.eps_min) CHECK(n <= s.count_bound(eps) * (1 + 1e-12));
                // the dropped tail really is within eps
                Expansion rest(1);
                for (std::size_t j = n; j < s.size(); ++j) rest.push_back(s.terms[j]);
                double tail = rest.empty() ? 0.0 : sobolev_norm(rest, 1);
                CHECK(tail <= eps * (1 + 1e-12));
            }
        }
    }

    SUBCASE("count is monotone and the fit is tight somewhere")
    {
        std::mt19937_64 rng(11);
        RandomSpec spec;
        spec.min_terms = 5;
        spec.max_terms = 9;
        Expansion f = random_gaussian(rng, spec);
        std::vector<double> grid;
        for (double e = 1e-3; e < 10; e *= 2) grid.push_back(e);
        auto s = build_schedule(f, 1.5, grid);
        int prev = s.count(grid.front());
        bool tight = false;
        for (double e : grid) {
            CHECK(s.count(e) <= prev);
            prev = s.count(e);
            CHECK(std::pow(double(s.count(e)), 1.5) * e <= s.kappa * (1 + 1e-12));
        }
        for (std::size_t j = 0; j < s.size(); ++j)
            if (s.thresholds[j] * std::pow(double(j + 1), 1.5) == s.kappa) tight = true;
        for (double e : grid)
            if (std::pow(double(s.count(e)), 1.5) * e == s.kappa) tight = true;
        CHECK(tight);
    }

    SUBCASE("rejects nonpositive order")
    {
        CHECK_THROWS_AS(build_schedule(single(), 0.0, 1e-2), std::invalid_argument);
        CHECK_THROWS_AS(build_schedule(single(), -1.0, 1e-2), std::invalid_argument);
    }
}

TEST_CASE("truncation schedule")
{
    MolecularSystem sys = hydrogen_like(1.0);
    OperatorConfig cfg;
    auto ce = contraction_constants(cfg, sys);

    SUBCASE("rates")
    {
        auto s1 = build_schedule(single(), 1.0, 1e-3);
        auto t1 = build_truncation(s1, cfg, sys, 1e-3);
        CHECK(t1.q1 == doctest::Approx(std::sqrt(ce.q)).epsilon(1e-15));
        CHECK(t1.q2 == doctest::Approx(std::sqrt(ce.q)).epsilon(1e-15));
        for (double r : {0.5, 1.0, 2.0, 3.0}) {
            auto s = build_schedule(single(), r, 1e-3);
            auto t = build_truncation(s, cfg, sys, 1e-3);
            CHECK(std::abs(t.q1 * t.q2 - ce.q) <= 4 * 2.2e-16);
            CHECK(std::abs(std::pow(t.q2, 1 / r) - t.q1) <= 10 * 2.2e-16);
        }
    }

    SUBCASE("delta")
    {
        CHECK(schedule_delta(4, 0.9, 1) == doctest::Approx(0.25 * (0.1 / 1.9) * (0.1 / 1.9)).epsilon(1e-14));
        CHECK(schedule_delta(4, 0.9, 1) == doctest::Approx(6.925e-4).epsilon(1e-3));
        auto s = build_schedule(single(), 2.0, 1e-3);
        auto t = build_truncation(s, cfg, sys, 1e-3);
        CHECK(t.M == 4);
        CHECK(t.delta == doctest::Approx(std::pow(4.0, -2) * std::pow((1 - t.q1) / (1 + t.q1), 4)).epsilon(1e-14));
        auto o = build_truncation(s, cfg, sys, 1e-3, 0.25);
        CHECK(o.delta == 0.25);
    }

    SUBCASE("caps and count")
    {
        Expansion f = geometric(10);
        for (double r : {1.0, 2.0}) {
            auto s = build_schedule(f, r, 1e-9);
            for (double eps : {1e-5, 1e-6, 1e-7, 1e-8}) {
                auto t = build_truncation(s, cfg, sys, eps);
                for (std::size_t n = 1; n < t.n.size(); ++n) CHECK(t.n[n] <= t.n[n - 1]);
                if (!t.n.empty()) CHECK(t.n.back() > 0);
                for (std::size_t n = 0; n < t.n.size(); ++n) {
                    double thr = eps / t.delta * std::pow(t.q2, -double(n));
                    CHECK(t.n[n] == s.count(thr));
                    if (thr > s.kappa) CHECK(t.n[n] == 0);
                }
                double f2 = std::pow((1 + t.q1) / (1 - t.q1), 2);
                double bound = s.prefactor * std::pow(t.delta, 1 / r) * f2 * std::pow(s.kappa / eps, 1 / r);
                CHECK(double(t.weighted_count()) <= bound);
            }
        }
    }
}

TEST_CASE("scheduled application")
{
    MolecularSystem sys = hydrogen_like(1.0);

    SUBCASE("empty schedule")
    {
        OperatorConfig cfg = admissible_cfg(1.0, -4, 4);
        auto s = build_schedule(single(), 1.0, 1e-3);
        auto t = build_truncation(s, cfg, sys, 10.0);
        CHECK(t.n.empty());
        auto a = apply_T_scheduled(s, t, cfg, sys);
        CHECK(a.expansion.empty());
        CHECK(a.schedule.count(1e-300) == 0);
    }

    SUBCASE("error bound at the admissible gamma")
    {
        for (double r : {1.0, 2.0}) {
            OperatorConfig cfg = admissible_cfg(r);
            auto s = build_schedule(single(), r, 1e-3);
            auto t = build_truncation(s, cfg, sys, 1e-3);
            auto ce = contraction_constants(cfg, sys);
            double b = ce.alpha / t.delta * std::pow((1 + t.q1) / (1 - t.q1), 2) * 1e-3;
            CHECK(b <= 0.5e-3 * (1 + 1e-9));
        }
    }

    SUBCASE("halving law and accuracy")
    {
        OperatorConfig cfg = admissible_cfg(1.0, -4, 4);
        std::mt19937_64 rng(5);
        RandomSpec spec;
        spec.min_terms = 3;
        spec.max_terms = 3;
        Expansion f = random_gaussian(rng, spec);
        double r = 1.0;
        auto s = build_schedule(f, r, 1e-3);
        double eps = 1e-6;
        auto t = build_truncation(s, cfg, sys, eps);
        auto a = apply_T_scheduled(s, t, cfg, sys);
        REQUIRE(!a.expansion.empty());
        CHECK(a.schedule.kappa == doctest::Approx(s.kappa / 2));
        CHECK(a.schedule.prefactor == doctest::Approx(0.5));
        for (std::size_t j = 1; j < a.schedule.size(); ++j)
            CHECK(a.schedule.thresholds[j - 1] >= a.schedule.thresholds[j]);
        // Gauss-function count of the application
        CHECK(double(a.expansion.size()) <= 0.5 * std::pow(s.kappa / eps, 1 / r));
        for (double e = t.delta * s.eps_min; e < 10; e *= 1.7)
            CHECK(a.schedule.count(e) <= 0.5 * std::pow(s.kappa / (2 * e), 1 / r) + 1e-12);
        // against T~ over the same range on the whole target
        TTildeOptions opt;
        opt.override_contractive = true;
        Expansion full = apply_T_tilde(f, cfg, sys, opt);
        double err = sobolev_norm(combine_like_terms(full - a.expansion), 1);
        CHECK(err <= a.error_bound);
    }

    SUBCASE("overridden delta")
    {
        OperatorConfig cfg;
        cfg.gamma = 1e-12;
        cfg.k_lo = -3;
        cfg.k_hi = 3;
        Expansion f = single();
        auto s = build_schedule(f, 1.0, 1e-3);
        auto t = build_truncation(s, cfg, sys, 5e-4, 1e-3);
        auto a = apply_T_scheduled(s, t, cfg, sys);
        CHECK(a.expansion.size() == 98);
        TTildeOptions opt;
        opt.override_contractive = true;
        Expansion full = apply_T_tilde(f, cfg, sys, opt);
        CHECK(full.size() == a.expansion.size());
        double err = sobolev_norm(combine_like_terms(full - a.expansion), 1);
        CHECK(err <= 1e-12 * sobolev_norm(full, 1));
    }
}

TEST_CASE("combine like terms")
{
    Expansion f = geometric(4);
    CHECK(combine_like_terms(f - f).empty());
    Expansion g = combine_like_terms(f + f);
    CHECK(g.size() == f.size());
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(g[i].coeff == 2 * f[i].coeff);
}

TEST_CASE("neumann solve")
{
    MolecularSystem sys = hydrogen_like(1.0);

    CHECK(neumann_count_bound(1.0, 0.5, 1.0) == doctest::Approx(8.0));

    SUBCASE("single Gaussian at the admissible gamma")
    {
        for (double r : {1.0, 2.0}) {
            OperatorConfig cfg = admissible_cfg(r);
            for (double eps : {1e-2, 1e-3}) {
                auto res = neumann_solve(single(), cfg, sys, eps, r);
                const auto& R = res.report;
                CHECK(R.admissible);
                CHECK(R.term_count == int(res.u.size()));
                CHECK(R.count_bound_holds);
                CHECK(R.term_count <= R.count_bound);
                CHECK(R.residual.norm + R.residual.slack_bound <= eps + R.residual.budget);
                CHECK(R.residual.budget == doctest::Approx(eps / 10));
                for (auto& L : R.levels) {
                    CHECK(L.eps_nu == doctest::Approx(std::ldexp(eps, -(L.nu + 1))));
                    double b = std::ldexp(1.0, -L.nu) * std::pow(R.kappa / (std::ldexp(1.0, L.nu) * L.eps_nu), 1 / r);
                    CHECK(L.count_bound == doctest::Approx(b));
                    CHECK(L.terms <= b * (1 + 1e-12));
                }
            }
        }
    }

    SUBCASE("nontrivial level")
    {
        OperatorConfig cfg;
        cfg.gamma = 1e-12;
        cfg.k_lo = -3;
        cfg.k_hi = 3;
        SolveOptions opt;
        opt.require_admissible = false;
        opt.delta_override = 1e-3;
        Expansion f = single();
        auto res = neumann_solve(f, cfg, sys, 1e-3, 1.0, opt);
        const auto& R = res.report;
        REQUIRE(R.levels.size() >= 2);
        CHECK(R.levels[1].terms == 98);
        CHECK(R.term_count == 99);
        // with later levels empty u = f - T~ f
        TTildeOptions topt;
        topt.override_contractive = true;
        Expansion ref = f - apply_T_tilde(f, cfg, sys, topt);
        CHECK(sobolev_norm(combine_like_terms(ref - res.u), 1) <= 1e-12 * sobolev_norm(ref, 1));
        // partial sums approach u with ratio below the operator bound
        Expansion tf = apply_T_tilde(f, cfg, sys, topt);
        double d0 = sobolev_norm(combine_like_terms(f - res.u), 1);
        CHECK(d0 <= R.operator_bound * sobolev_norm(f, 1));
        CHECK(R.residual.norm <= 1e-3 + R.residual.budget);
        CHECK(sobolev_norm(tf, 1) > 0);
    }

    SUBCASE("rejections")
    {
        OperatorConfig cfg;
        cfg.gamma = 1e-2;
        CHECK_THROWS_AS(neumann_solve(single(), cfg, sys, 1e-3, 1.0), NonContractiveError);
        cfg.gamma = 1e-12;
        CHECK_THROWS_AS(neumann_solve(single(), cfg, sys, 1e-3, 1.0), NonContractiveError);
        OperatorConfig ok = admissible_cfg(1.0);
        CHECK_THROWS_AS(neumann_solve(single(), ok, sys, 0.0, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(neumann_solve(single(), ok, sys, 1e-3, 0.0), std::invalid_argument);
    }
}

TEST_CASE("reference residual")
{
    MolecularSystem sys = hydrogen_like(1.0);
    OperatorConfig cfg;
    cfg.gamma = 0.1;
    cfg.k_lo = -2;
    cfg.k_hi = 2;
    Expansion f = single();
    Expansion u = single(1.3);
    auto rep = reference_residual(u, f, cfg, sys, 0.0, 1);
    CHECK(rep.k_range.lo == -3);
    CHECK(rep.k_range.hi == 3);
    CHECK(rep.units_kept == rep.units);
    OperatorConfig wide = cfg;
    wide.k_lo = -3;
    wide.k_hi = 3;
    TTildeOptions opt;
    opt.override_contractive = true;
    double ref = sobolev_norm(u - f + apply_T_tilde(u, wide, sys, opt), 1);
    CHECK(rep.norm == doctest::Approx(ref).epsilon(1e-9));

    auto pruned = reference_residual(u, f, cfg, sys, 1e-2, 1);
    CHECK(pruned.slack_bound <= 1e-2);
    CHECK(std::abs(pruned.norm - ref) <= pruned.slack_bound * (1 + 1e-9));
    CHECK(pruned.units_kept < pruned.units);

    auto doubled = reference_residual(u, f, cfg, sys, 0.0);
    CHECK(doubled.k_range.lo == -5);
    CHECK(doubled.k_range.hi == 5);
}

TEST_CASE("perturbation certificate")
{
    MolecularSystem sys = hydrogen_like(2.0);
    OperatorConfig cfg;
    cfg.gamma = 1e-2;
    cfg.h = 0.5;
    CHECK(gap_figure(1e-2, 0.5) == doctest::Approx(0.1 * std::sqrt(2.0) * std::exp(-2 * M_PI * M_PI)).epsilon(1e-14));
    CHECK(gap_figure(1e-2, 0.5) == doctest::Approx(3.78e-10).epsilon(2e-3));

    // non-contractive at this gamma
    CHECK_THROWS_AS(perturbation_certificate(cfg, sys, 1.0, 1.0), NonContractiveError);

    cfg.gamma = 1e-20;
    auto c = perturbation_certificate(cfg, sys, 2.0, 3.0);
    double q = std::exp(-M_PI * M_PI / cfg.h);
    double eV = 2 * std::sqrt(2.0) * (q / std::sqrt(1 + std::pow(q, 4)) + q * q / std::sqrt(1 + std::pow(q, 8)));
    double eG = 4 * M_PI / std::sqrt(cfg.h) *
                (q / std::sqrt(1 - std::pow(q, 4)) + std::sqrt(2.0) * q * q / std::sqrt(1 - std::pow(q, 8)));
    CHECK(c.eps_V == doctest::Approx(eV).epsilon(1e-12));
    CHECK(c.eps_G == doctest::Approx(eG).epsilon(1e-12));
    double e = std::max(eV, eG);
    double d = 4.0 * std::sqrt(cfg.gamma) * (2 * e + e * e);
    CHECK(c.delta_op == doctest::Approx(d).epsilon(1e-12));
    CHECK(c.solution_gap_bound == doctest::Approx(d / (1 - c.operator_bound) * 2.0).epsilon(1e-12));
    CHECK(c.smoothing_gap == doctest::Approx(std::sqrt(cfg.gamma) * 3.0).epsilon(1e-12));
    CHECK(c.delta_op >= 0);

    double prev = c.delta_op;
    for (double h : {0.4, 0.3, 0.2, 0.1}) {
        cfg.h = h;
        auto ch = perturbation_certificate(cfg, sys, 2.0, 3.0);
        CHECK(ch.delta_op < prev);
        CHECK(ch.solution_gap_bound < 2 * prev);
        prev = ch.delta_op;
    }
    CHECK(prev < 1e-40);
}
