// Acceptance criteria 1-8. One PASS/FAIL line per criterion; exit status 1 if any fails.
//   acceptance [--criterion N]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <gausskern/eigensolver.hpp>
#include <gausskern/operators.hpp>
#include <gausskern/solver.hpp>
#include <gausskern/validate.hpp>

using namespace gausskern;

namespace {

constexpr std::uint64_t kSeed = 20240607;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x)
{
    char b[32];
    std::snprintf(b, sizeof b, "%.3g", x);
    return b;
}

Outcome from_suite(const SuiteReport& s)
{
    Outcome o;
    o.pass = s.pass();
    std::ostringstream os;
    for (const auto& c : s.checks) {
        if (!os.str().empty()) os << "; ";
        os << c.name << " " << fmt(c.measured) << "<=" << fmt(c.tolerance_bound) << " (" << c.violations << "/"
           << c.trials << ")";
    }
    o.detail = os.str();
    return o;
}

// --- 4: counting laws

Outcome counting_laws()
{
    Outcome o{true, ""};
    std::ostringstream os;
    int bad_levels = 0;
    for (int n = 0; n <= 24; ++n) {
        auto pairs = level_pairs(n);
        std::set<std::pair<int, int>> uniq(pairs.begin(), pairs.end());
        int expect = n == 0 ? 1 : 4 * n;
        bool ok = static_cast<int>(pairs.size()) == expect && ell_count(n) == expect && uniq.size() == pairs.size();
        for (auto [k, l] : pairs) ok = ok && std::abs(k) + std::abs(l) == n;
        if (!ok) ++bad_levels;
    }
    const double q = 0.5, closed = std::pow((1 + q) / (1 - q), 2);
    double sum = 0;
    for (int n = 0; n < 200; ++n) sum += static_cast<int>(level_pairs(n).size()) * std::pow(q, n);
    double err_direct = std::abs(sum - closed) / closed;
    double err_lib = std::abs(level_series(q) - closed) / closed;
    os << "l(n) mismatches " << bad_levels << "; series rel err " << fmt(err_direct) << ", " << fmt(err_lib)
       << " <= 1e-10";
    o.pass = bad_levels == 0 && err_direct <= 1e-10 && err_lib <= 1e-10;

    OperatorConfig cfg;
    std::mt19937_64 rng(kSeed);
    std::normal_distribution<double> nd(0, 1);
    for (auto [N, K] : {std::pair{1, 1}, std::pair{2, 1}, std::pair{2, 2}}) {
        MolecularSystem sys;
        sys.n_electrons = N;
        for (int i = 0; i < K; ++i) sys.nuclei.push_back({Eigen::Vector3d(1.3 * i, -0.4 * i, 0.2), 1.0 + i});
        int M = 4 * (N * K + N * (N - 1) / 2);
        const int terms = 3;
        Expansion e(N);
        for (int t = 0; t < terms; ++t) {
            Mat A = Mat::Random(N, N);
            Vec c(3 * N);
            for (int i = 0; i < 3 * N; ++i) c(i) = nd(rng);
            e.push_back(make_gaussian(nd(rng), c, Prec::structured(A * A.transpose() + 0.5 * Mat::Identity(N, N))));
        }
        int v = static_cast<int>(apply_Vk(e, 0, sys, cfg).size()) / terms;
        int t = static_cast<int>(apply_Tkl(e, 1, -2, sys, cfg).size()) / terms;
        os << "; (N,K)=(" << N << "," << K << ") M=" << M << " V fan-out " << v << " T fan-out " << t;
        o.pass = o.pass && M_const(sys) == M && v == M / 4 && t == M / 2;
    }
    o.detail = os.str();
    return o;
}

// --- 5: scheduled Neumann solve at the admissible gamma

Outcome neumann_end_to_end()
{
    Outcome o{true, ""};
    std::ostringstream os;
    MolecularSystem sys = hydrogen_like(1.0);
    for (double r : {1.0, 2.0})
        for (double eps : {1e-2, 1e-3}) {
            auto t0 = std::chrono::steady_clock::now();
            OperatorConfig cfg;
            cfg.gamma = select_gamma(cfg, sys, r).gamma;
            Expansion f = initial_guess(sys, 1.0);
            SolveResult res = neumann_solve(f, cfg, sys, eps, r);
            const SolveReport& rep = res.report;
            double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            double count_bound = 2 * std::pow(2 * rep.kappa / eps, 1 / r);
            bool ok_res = rep.residual.norm <= eps + rep.residual.slack_bound;
            bool ok_count = rep.term_count <= count_bound && std::abs(count_bound - rep.count_bound) <= 1e-12 * count_bound;
            bool ok = ok_res && ok_count && rep.admissible && secs < 120;
            o.pass = o.pass && ok;
            os << (os.str().empty() ? "" : "; ") << "r=" << r << " eps=" << fmt(eps) << ": residual "
               << fmt(rep.residual.norm) << "<=" << fmt(eps) << "+" << fmt(rep.residual.slack_bound) << ", terms "
               << rep.term_count << "<=" << fmt(count_bound) << ", levels " << rep.levels_used << ", gamma "
               << fmt(cfg.gamma) << ", " << fmt(secs) << "s";
        }
    o.detail = os.str();
    return o;
}

// --- 7: hydrogen-like inverse iteration

Outcome hydrogen_eigen()
{
    MolecularSystem sys = hydrogen_like(2.0);
    InverseIterationConfig cfg;
    cfg.h = 0.25;
    cfg.max_iter = 30;
    cfg.lambda1 = -1 + cfg.mu;
    cfg.lambda2 = -0.25 + cfg.mu;
    cfg.rate_slack = 1e-2;
    // best single Gaussian exp(-p r^2/2) for 1.5 p - 2 Z sqrt(p/pi)
    const double Z = 2.0;
    double p = std::pow(2 * Z / 3, 2) / M_PI;
    InvitResult r = run_inverse_iteration(sys, initial_guess(sys, p), cfg);
    const auto& R = r.history.records;
    bool strict = true;
    for (std::size_t k = 1; k < R.size(); ++k) strict = strict && R[k].rayleigh < R[k - 1].rayleigh;
    int first = -1;
    for (const auto& x : R)
        if (x.rayleigh <= -0.99) {
            first = x.iter;
            break;
        }
    // record k carries the ratio of step k -> k+1
    double worst_ratio_gap = -HUGE_VAL;
    int rated = 0;
    for (std::size_t k = 0; k + 1 < R.size(); ++k) {
        if (!(R[k].rate_bound > 0)) continue;
        worst_ratio_gap = std::max(worst_ratio_gap, R[k].measured_ratio - R[k].rate_bound);
        ++rated;
    }
    int max_terms = 0;
    for (const auto& x : R) max_terms = std::max(max_terms, x.term_count);
    Outcome o;
    o.pass = first >= 0 && first <= 30 && strict && r.history.monotone && r.history.rate_checked && r.history.rate_ok &&
             rated > 0 && worst_ratio_gap <= 1e-2 && cfg.n_work >= 20;
    std::ostringstream os;
    os << "lambda " << std::setprecision(8) << r.eigenvalue << " <= -0.99 first at step " << first << " of "
       << (R.empty() ? 0 : R.back().iter) << ", strictly decreasing " << (strict ? "yes" : "no")
       << ", max(ratio - rate_bound) " << fmt(worst_ratio_gap) << " <= 1e-2 over " << rated << " steps, working terms " << max_terms << " (cap "
       << cfg.n_work << "), mu " << cfg.mu << ", init precision " << fmt(p);
    o.detail = os.str();
    return o;
}

// --- 8: certificates recomputed from (gamma, h, N, Z)

double eps_series(double beta, double h)
{
    const double q = std::exp(-M_PI * M_PI / h);
    double s = 0;
    for (int l = 1; l <= 60; ++l) {
        double ql = std::pow(q, l), q4 = std::pow(q, 4 * l);
        s += beta == 0.5 ? ql / std::sqrt(1 + q4) : std::sqrt(double(l)) * ql / std::sqrt(1 - q4);
    }
    return beta == 0.5 ? 2 * std::sqrt(2.0) * s : 4 * M_PI / std::sqrt(h) * s;
}

Outcome certificates()
{
    Outcome o{true, ""};
    double worst = 0;
    int cases = 0;
    auto check = [&](double gamma, double h, int N, double Z, const PerturbationCertificate& c) {
        double theta = (2 * Z + N - 1) * std::sqrt(double(N));
        double e = std::max(eps_series(0.5, h), eps_series(1.0, h));
        double dop = theta * std::sqrt(gamma) * (2 * e + e * e);
        double gap = std::sqrt(gamma) * std::pow(h, -0.5) * std::exp(-M_PI * M_PI / h);
        worst = std::max({worst, std::abs(c.delta_op - dop) / dop, std::abs(c.gap_figure - gap) / gap});
        ++cases;
    };
    // solver reports at N = 1
    for (double Z : {1.0, 2.0})
        for (double h : {0.5, 0.25}) {
            MolecularSystem sys = hydrogen_like(Z);
            OperatorConfig cfg;
            cfg.h = h;
            cfg.gamma = select_gamma(cfg, sys, 1.0).gamma;
            SolveOptions opt;
            opt.measure_residual = false;
            auto res = neumann_solve(initial_guess(sys, 1.0), cfg, sys, 1e-2, 1.0, opt);
            check(cfg.gamma, h, 1, Z, res.report.certificate);
        }
    // direct certificates at N = 2
    for (double Z : {1.0, 2.0})
        for (double h : {0.5, 0.3}) {
            MolecularSystem sys = hydrogen_like(Z, 2);
            OperatorConfig cfg;
            cfg.h = h;
            cfg.gamma = 1e-24;
            check(cfg.gamma, h, 2, Z, perturbation_certificate(cfg, sys, 1.0, 1.0));
        }
    o.pass = worst <= 1e-12;
    o.detail = std::to_string(cases) + " cases, max rel diff (delta_op, gap figure) " + fmt(worst) + " <= 1e-12";
    return o;
}

struct Criterion {
    int id;
    const char* title;
    double budget_seconds;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance criteria"};
    int only = 0;
    app.add_option("--criterion", only, "run a single criterion (1-8)")->check(CLI::Range(1, 8));
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> all = {
        {1, "expsum certification", 1.0, [] { return from_suite(validate_expsum()); }},
        {2, "Gaussian algebra vs quadrature", 30.0, [] { return from_suite(validate_algebra(kSeed, 100)); }},
        {3, "inequality suite", 300.0, [] { return from_suite(validate_lemmas(kSeed, 50)); }},
        {4, "counting laws", 1.0, counting_laws},
        {5, "Neumann solve end to end", 480.0, neumann_end_to_end},
        {6, "K-functional identity", 60.0, [] { return from_suite(validate_kfunctional(kSeed, 10)); }},
        {7, "hydrogen-like inverse iteration", 300.0, hydrogen_eigen},
        {8, "perturbation certificates", 1.0, certificates},
    };

    bool ok = true;
    for (const auto& c : all) {
        if (only && c.id != only) continue;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool pass = o.pass && secs < c.budget_seconds;
        ok = ok && pass;
        std::cout << "criterion " << c.id << " " << (pass ? "PASS" : "FAIL") << " " << c.title << " [" << fmt(secs)
                  << "s < " << c.budget_seconds << "s] " << o.detail << std::endl;
    }
    return ok ? 0 : 1;
}
