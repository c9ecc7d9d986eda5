#include <gausskern/lemmas.hpp>

#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

namespace gausskern {

namespace {

InequalityResult finish(double lhs, double rhs, double rel_tol)
{
    InequalityResult r;
    r.lhs = lhs;
    r.rhs = rhs;
    r.holds = lhs <= rhs * (1 + rel_tol);
    return r;
}

template <class F>
SuiteResult run_suite(const std::string& name, int trials, F&& trial)
{
    auto t0 = std::chrono::steady_clock::now();
    SuiteResult s;
    s.name = name;
    for (int i = 0; i < trials; ++i) {
        InequalityResult r = trial(i);
        ++s.trials;
        if (!r.holds) ++s.violations;
        s.max_ratio = std::max(s.max_ratio, r.ratio());
    }
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return s;
}

RandomSpec small_spec()
{
    RandomSpec spec;
    spec.max_terms = 2;
    return spec;
}

} // namespace

double gk_seminorm_bound(int k, double s, const OperatorConfig& cfg)
{
    if (!(s > 0 && s < 2)) throw std::invalid_argument("index must lie in (0,2)");
    double m = 2 - s;
    double kh = k * cfg.h;
    return cfg.h * std::pow(m / (2 * M_E), m / 2) * std::exp(std::exp(kh) * cfg.lambda + s * kh / 2);
}

InequalityResult gk_seminorm_check(const Expansion& f, int k, double s, const OperatorConfig& cfg, double rel_tol)
{
    Expansion g = apply_Gk(f, k, cfg);
    double lhs = g.empty() ? 0.0 : fractional_seminorm(g, 2 - s);
    return finish(lhs, gk_seminorm_bound(k, s, cfg) * sobolev_norm(f, 0), rel_tol);
}

InequalityResult cutoff_check(const Expansion& v, double s, double gamma, double rel_tol)
{
    if (!(s > 0 && s < 0.5)) throw std::invalid_argument("index must lie in (0,1/2)");
    OperatorConfig cfg;
    cfg.gamma = gamma;
    Expansion p = apply_P(v, cfg);
    double lhs = fractional_norm(p, 1 + s);
    return finish(lhs, std::sqrt(2.0) * std::pow(gamma, 0.5 - s) * fractional_seminorm(v, 2 - s), rel_tol);
}

InequalityResult tkl_decay_check(const Expansion& u, int k, int l, const MolecularSystem& sys,
                                 const OperatorConfig& cfg, double rel_tol)
{
    auto ce = contraction_constants(cfg, sys);
    Expansion t = apply_Tkl(u, k, l, sys, cfg);
    double lhs = t.empty() ? 0.0 : sobolev_norm(t, 1);
    return finish(lhs, ce.alpha * std::pow(ce.q, std::abs(k) + std::abs(l)) * sobolev_norm(u, 1), rel_tol);
}

InequalityResult gp_check(const Expansion& f, const OperatorConfig& cfg, double rel_tol)
{
    Expansion p = apply_P(f, cfg);
    KRange kr = cfg.k_range();
    Expansion g(f.n_electrons(), f.degree_cap());
    for (int l = kr.lo; l <= kr.hi; ++l) g += apply_Gk(p, l, cfg);
    return finish(sobolev_norm(g, 1), std::sqrt(cfg.gamma) * sobolev_norm(f, 0), rel_tol);
}

InequalityResult potential_accuracy_check(const Term& u, double Z, const OperatorConfig& cfg)
{
    if (u.dim() != 3 || !u.is_gaussian() || !u.precision.is_structured() || u.center.norm() != 0)
        throw std::invalid_argument("potential accuracy check needs an origin-centered isotropic Gaussian");
    double a = u.precision.matrix()(0, 0);
    double c = u.scalar();
    // wide range so that truncation outside [r_min, r_max] stays below the bound
    const double r_lo = 1e-30, r_hi = 1e4;
    KRange kr = exp_sum_range(0.5, cfg.h, r_lo * r_lo, r_hi * r_hi, 1e-15);
    std::vector<double> w, e;
    for (int k = kr.lo; k <= kr.hi; ++k) {
        w.push_back(phi_weight(k, cfg.h));
        e.push_back(std::exp(k * cfg.h));
    }
    auto err2 = [&](double r) {
        double s = 0;
        for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * std::exp(-e[i] * r * r);
        double d = Z * (r * s - 1);
        double ur = c * std::exp(-0.5 * a * r * r);
        return 4 * M_PI * d * d * ur * ur;  // (d/r)^2 u^2 r^2
    };
    // panels in log r
    const auto& gl = gauss_legendre(10);
    double lo = std::log(r_lo), hi = std::log(std::sqrt(80.0 / a));
    double width = cfg.h / 8;
    int np = static_cast<int>(std::ceil((hi - lo) / width));
    double acc = 0;
    for (int p = 0; p < np; ++p) {
        double s0 = lo + p * (hi - lo) / np, s1 = lo + (p + 1) * (hi - lo) / np;
        for (std::size_t i = 0; i < gl.x.size(); ++i) {
            double s = 0.5 * (s0 + s1) + 0.5 * (s1 - s0) * gl.x[i];
            double r = std::exp(s);
            acc += 0.5 * (s1 - s0) * gl.w[i] * err2(r) * r;
        }
    }
    // below r_lo the sum is bounded and the error is at most Z/r
    acc += 4 * M_PI * Z * Z * c * c * r_lo;
    Expansion ue(1);
    ue.push_back(u);
    double eps = error_bound(0.5, cfg.h) + 1e-15;
    return finish(std::sqrt(acc), theta_const(1, Z) * eps * sobolev_norm(ue, 1), 1e-9);
}

SuiteResult hardy_suite(int trials, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    auto spec = small_spec();
    return run_suite("hardy", trials, [&](int) { return hardy_check(random_expansion(rng, spec)); });
}

SuiteResult hardy_rellich_suite(double t, int trials, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    auto spec = small_spec();
    return run_suite("hardy_rellich_" + std::to_string(t).substr(0, 4), trials,
                     [&](int) { return hardy_rellich_check(random_expansion(rng, spec), t); });
}

SuiteResult sinc_component_suite(double t, double h, int trials, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    auto spec = small_spec();
    std::vector<int> ks;
    for (int k = -8; k <= 8; ++k) ks.push_back(k);
    return run_suite("sinc_components", trials, [&](int) {
        auto rep = sinc_component_check(ks, t, h, {random_expansion(rng, spec)});
        InequalityResult r;
        r.holds = rep.violations == 0;
        r.lhs = rep.max_ratio;
        r.rhs = 1;
        return r;
    });
}

SuiteResult gk_suite(int trials, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    auto spec = small_spec();
    std::uniform_int_distribution<int> kd(-8, 8);
    const double ss[] = {0.25, 0.5, 1.0, 1.5};
    OperatorConfig cfg;
    return run_suite("gk_seminorm", trials, [&](int i) {
        Expansion f = random_expansion(rng, spec);
        return gk_seminorm_check(f, kd(rng), ss[i % 4], cfg);
    });
}

SuiteResult cutoff_suite(int trials, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    auto spec = small_spec();
    const double ss[] = {0.1, 0.25, 0.4};
    const double gs[] = {1e-3, 1e-2, 0.1, 0.5};
    return run_suite("cutoff", trials, [&](int i) {
        Expansion v = random_expansion(rng, spec);
        return cutoff_check(v, ss[i % 3], gs[(i / 3) % 4]);
    });
}

SuiteResult tkl_suite(int trials, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> kd(-8, 8);
    OperatorConfig cfg;
    MolecularSystem sys = hydrogen_like(1.0);
    return run_suite("tkl_decay", trials, [&](int) {
        Expansion u = random_gaussian(rng);
        int k = kd(rng), l = kd(rng);
        return tkl_decay_check(u, k, l, sys, cfg);
    });
}

} // namespace gausskern
