#include <doctest.h>

#include <cmath>
#include <random>

#include <gausskern/lemmas.hpp>
#include <gausskern/operators.hpp>
#include <gausskern/oracle.hpp>

using namespace gausskern;

namespace {

Expansion unit_gaussian(int N = 1, double q = 1)
{
    Expansion e(N);
    e.push_back(make_gaussian(1.0, Vec(Vec::Zero(3 * N)), Prec::identity(N, q)));
    return e;
}

MolecularSystem system(int N, int K)
{
    MolecularSystem s;
    s.n_electrons = N;
    for (int i = 0; i < K; ++i) s.nuclei.push_back({Eigen::Vector3d(1.3 * i, -0.4 * i, 0.2), 1.0 + i});
    return s;
}

Expansion random_structured(std::mt19937_64& rng, int N, int n)
{
    std::normal_distribution<double> nd(0, 1);
    Expansion e(N);
    for (int t = 0; t < n; ++t) {
        Mat A = Mat::Random(N, N);
        Mat Q = A * A.transpose() + 0.5 * Mat::Identity(N, N);
        Vec c(3 * N);
        for (int i = 0; i < 3 * N; ++i) c(i) = nd(rng);
        e.push_back(make_gaussian(nd(rng), c, Prec::structured(Q)));
    }
    return e;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace

TEST_CASE("theta and contraction constants")
{
    CHECK(theta_const(1, 1) == doctest::Approx(2));
    CHECK(theta_const(2, 2) == doctest::Approx(5 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(theta_const(1, 2) == doctest::Approx(4));
    OperatorConfig cfg;
    auto c = contraction_constants(cfg, hydrogen_like(1));
    CHECK(c.q == doctest::Approx(0.93941).epsilon(1e-5));
    CHECK(kappa_star(-1, 0.25) == 1.0);
    CHECK(c.M == 4);
    OperatorConfig c4 = cfg;
    c4.gamma = cfg.gamma / 4;
    double ratio = alpha_const(c4, hydrogen_like(1)) / alpha_const(cfg, hydrogen_like(1));
    CHECK(rel(ratio, std::pow(4.0, -0.25)) < 1e-14);
    CHECK(rel(c.operator_bound, c.alpha * std::pow((1 + c.q) / (1 - c.q), 2)) < 1e-15);
}

TEST_CASE("level enumeration and series")
{
    int expect[] = {1, 4, 8, 12};
    for (int n = 0; n < 4; ++n) {
        CHECK(static_cast<int>(level_pairs(n).size()) == expect[n]);
        CHECK(ell_count(n) == expect[n]);
        for (auto [k, l] : level_pairs(n)) CHECK(std::abs(k) + std::abs(l) == n);
    }
    for (int n = 0; n < 30; ++n) CHECK(static_cast<int>(level_pairs(n).size()) == ell_count(n));
    CHECK(std::abs(level_series(0.5) - 9) < 1e-10);
    double q = 0.9;
    CHECK(rel(level_series(q), std::pow((1 + q) / (1 - q), 2)) < 1e-10);
}

TEST_CASE("fan-out counts")
{
    OperatorConfig cfg;
    std::mt19937_64 rng(3);
    for (auto [N, K] : {std::pair{1, 1}, std::pair{2, 1}, std::pair{2, 2}}) {
        auto sys = system(N, K);
        int M = M_const(sys);
        Expansion e = random_structured(rng, N, 3);
        CHECK(static_cast<int>(apply_Vk(e, 0, sys, cfg).size()) == 3 * M / 4);
        CHECK(static_cast<int>(apply_Tkl(e, 1, -2, sys, cfg).size()) == 3 * M / 2);
    }
    CHECK(M_const(system(2, 1)) == 12);
}

TEST_CASE("V_k pointwise")
{
    OperatorConfig cfg;
    auto sys = hydrogen_like(1);
    Expansion u = unit_gaussian();
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(0, 1.2);
    for (int k : {-6, 0, 3}) {
        Expansion v = apply_Vk(u, k, sys, cfg);
        REQUIRE(v.size() == 1);
        for (int i = 0; i < 100; ++i) {
            Vec x(3);
            for (int j = 0; j < 3; ++j) x(j) = nd(rng);
            double r2 = x.squaredNorm();
            double direct = -phi_weight(k, cfg.h) * std::exp(-std::exp(k * cfg.h) * r2) * std::exp(-0.5 * r2);
            CHECK(rel(evaluate(v, x), direct) < 1e-12);
        }
    }
    // two electrons: nucleus and pair factors
    auto s2 = system(2, 1);
    Expansion u2 = unit_gaussian(2);
    Expansion v2 = apply_Vk(u2, 1, s2, cfg);
    for (int i = 0; i < 50; ++i) {
        Vec x(6);
        for (int j = 0; j < 6; ++j) x(j) = nd(rng);
        double e = std::exp(cfg.h), w = phi_weight(1, cfg.h);
        Eigen::Vector3d a = s2.nuclei[0].position;
        double f = -w * std::exp(-e * (x.segment<3>(0) - a).squaredNorm()) -
                   w * std::exp(-e * (x.segment<3>(3) - a).squaredNorm()) +
                   w * std::exp(-e * (x.segment<3>(0) - x.segment<3>(3)).squaredNorm());
        CHECK(rel(evaluate(v2, x), f * std::exp(-0.5 * x.squaredNorm())) < 1e-12);
    }
}

TEST_CASE("G_k example and underflow")
{
    OperatorConfig cfg;
    Expansion g = apply_Gk(unit_gaussian(), 0, cfg);
    REQUIRE(g.size() == 1);
    CHECK(rel(g[0].scalar(), 0.5 * std::exp(-1.0) * std::pow(3.0, -1.5)) < 1e-14);
    CHECK(rel(g[0].precision.matrix()(0, 0), 1.0 / 3) < 1e-14);
    CHECK(apply_Gk(unit_gaussian(), 40, cfg).empty());
    CHECK(gk_prefactor(40, cfg) == 0.0);
}

TEST_CASE("G_k against the Fourier symbol")
{
    OperatorConfig cfg;
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        Expansion f = trial < 4 ? random_gaussian(rng) : random_expansion(rng);
        int k = -3 + trial;
        Expansion g = apply_Gk(f, k, cfg);
        double ekh = std::exp(k * cfg.h);
        double pre = cfg.h * std::exp(ekh * cfg.lambda + k * cfg.h);
        FourierProfile prof(f);
        // ||G_k f||^2 = int pre^2 exp(-2 e^{kh} |w|^2) |f^|^2
        double ref = prof.integrate([&](double r) { return pre * pre * std::exp(-2 * ekh * r * r); });
        CHECK(rel(sobolev_norm(g, 0), std::sqrt(ref)) < 1e-8);
    }
}

TEST_CASE("P plus Q is the identity")
{
    OperatorConfig cfg;
    cfg.gamma = 0.5;
    Expansion q = apply_Q(unit_gaussian(), cfg);
    CHECK(rel(q[0].scalar(), std::pow(2.0, -1.5)) < 1e-14);
    CHECK(rel(q[0].precision.matrix()(0, 0), 0.5) < 1e-14);
    std::mt19937_64 rng(2);
    Expansion e = random_expansion(rng);
    Expansion pq = apply_P(e, cfg) + apply_Q(e, cfg);
    CHECK(apply_P(e, cfg).size() == 2 * e.size());
    std::normal_distribution<double> nd(0, 1.5);
    for (int i = 0; i < 50; ++i) {
        Vec x(3);
        for (int j = 0; j < 3; ++j) x(j) = nd(rng);
        double a = evaluate(pq, x), b = evaluate(e, x);
        CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)));
    }
}

TEST_CASE("G_k and P commute")
{
    OperatorConfig cfg;
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        Expansion e = random_expansion(rng);
        int k = trial - 5;
        Expansion a = apply_P(apply_Gk(e, k, cfg), cfg);
        Expansion b = apply_Gk(apply_P(e, cfg), k, cfg);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(std::abs(a[i].coeff - b[i].coeff) <= 1e-12 * std::abs(b[i].coeff));
            CHECK((a[i].precision.full() - b[i].precision.full()).norm() <=
                  1e-12 * b[i].precision.full().norm());
            for (auto& [m, c] : a[i].poly.terms()) {
                auto it = b[i].poly.terms().find(m);
                REQUIRE(it != b[i].poly.terms().end());
                CHECK(std::abs(c - it->second) <= 1e-11 * (1 + std::abs(c)));
            }
        }
    }
}

TEST_CASE("GP norm bound")
{
    OperatorConfig cfg;
    cfg.gamma = 0.1;
    std::mt19937_64 rng(21);
    int violations = 0;
    for (int i = 0; i < 20; ++i) {
        auto r = gp_check(random_gaussian(rng), cfg);
        if (!r.holds) ++violations;
        CHECK(r.lhs > 0);
    }
    CHECK(violations == 0);
}

TEST_CASE("T~ norm against the operator bound")
{
    OperatorConfig cfg;
    cfg.gamma = 1e-6;
    cfg.k_lo = -6;
    cfg.k_hi = 6;
    auto sys = hydrogen_like(1);
    auto ce = contraction_constants(cfg, sys);
    TTildeOptions opt;
    opt.override_contractive = true;
    std::mt19937_64 rng(4);
    for (int i = 0; i < 10; ++i) {
        Expansion u = random_gaussian(rng);
        double r = sobolev_norm(apply_T_tilde(u, cfg, sys, opt), 1) / sobolev_norm(u, 1);
        CHECK(r <= ce.operator_bound);
    }
}

TEST_CASE("T~ refuses non-contractive settings")
{
    OperatorConfig cfg;
    cfg.gamma = 0.5;
    CHECK_THROWS_AS(apply_T_tilde(unit_gaussian(), cfg, hydrogen_like(1)), NonContractiveError);
}

TEST_CASE("T~ level caps")
{
    OperatorConfig cfg;
    cfg.gamma = 1e-4;
    auto sys = hydrogen_like(1);
    TTildeOptions opt;
    opt.override_contractive = true;
    opt.level_caps = std::vector<int>{1, 1, 0};
    Expansion u = unit_gaussian();
    Expansion t = apply_T_tilde(u, cfg, sys, opt);
    CHECK(t.size() == 2 * (1 + 4));
    Expansion ref = apply_Tkl(u, 0, 0, sys, cfg);
    for (auto [k, l] : level_pairs(1)) ref += apply_Tkl(u, k, l, sys, cfg);
    CHECK(std::abs(sobolev_norm(t - ref, 1)) < 1e-14 * sobolev_norm(ref, 1));
}

TEST_CASE("norm lemmas")
{
    SUBCASE("sinc-sum component bounds")
    {
        auto rep = sinc_component_check(-2, 0.25, 0.5, 5, 7);
        CHECK(rep.violations == 0);
        auto rep2 = sinc_component_check(3, 0.25, 0.5, 5, 8);
        CHECK(rep2.violations == 0);
    }
    SUBCASE("G_k seminorm bound")
    {
        auto s = gk_suite(12, 31);
        CHECK(s.violations == 0);
        CHECK(s.max_ratio > 0);
    }
    SUBCASE("G_k bound is attained")
    {
        // e^{kh}|w|^2 = (2-s)/2 maximizes the ratio; a narrow Gaussian gets close for k < 0
        OperatorConfig cfg;
        Expansion f = unit_gaussian(1, 1e4);
        auto r = gk_seminorm_check(f, -20, 1.0, cfg);
        CHECK(r.holds);
        CHECK(r.ratio() > 0.5);
    }
    SUBCASE("cut-off bound")
    {
        auto s = cutoff_suite(8, 41);
        CHECK(s.violations == 0);
    }
    SUBCASE("composed decay")
    {
        auto s = tkl_suite(20, 51);
        CHECK(s.violations == 0);
    }
}

TEST_CASE("potential accuracy")
{
    OperatorConfig cfg;
    for (double a : {0.3, 1.0, 5.0}) {
        Term u = make_gaussian(1.0, Vec(Vec::Zero(3)), Prec::identity(1, a));
        auto r = potential_accuracy_check(u, 2.0, cfg);
        CHECK(r.holds);
        CHECK(r.lhs > 0);
    }
}

TEST_CASE("select_gamma")
{
    OperatorConfig cfg;
    auto sys = hydrogen_like(1);
    auto g1 = select_gamma(cfg, sys, 1);
    auto g2 = select_gamma(cfg, sys, 2);
    CHECK(g2.gamma <= g1.gamma);
    CHECK(g1.ratio <= 1);
    CHECK(g1.ratio >= 1 - 1e-4);
    OperatorConfig c = cfg;
    c.gamma = g1.gamma;
    CHECK(contraction_constants(c, sys).alpha <= g1.alpha_bound);
    // r = 0: alpha <= (1/2)((1-q)/(1+q))^2
    auto g0 = select_gamma(cfg, sys, 0);
    double q = std::exp(-cfg.vartheta * cfg.h / 2);
    CHECK(rel(g0.alpha_bound, 0.5 * std::pow((1 - q) / (1 + q), 2)) < 1e-14);
    c.gamma = g0.gamma;
    CHECK(contraction_constants(c, sys).contractive);
    CHECK_THROWS_AS(select_gamma(cfg, sys, -1), std::invalid_argument);
}

TEST_CASE("configuration validation")
{
    OperatorConfig cfg;
    cfg.gamma = 1.5;
    CHECK_THROWS_WITH_AS(cfg.validate(), "gamma must lie in (0,1)", std::invalid_argument);
    cfg = {};
    cfg.lambda = 0.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    MolecularSystem s;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}
