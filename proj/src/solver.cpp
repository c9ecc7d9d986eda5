#include <gausskern/solver.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <gausskern/errors.hpp>
#include <gausskern/parallel.hpp>

namespace gausskern {

int ApproximationSchedule::count(double eps) const
{
    // thresholds are nonincreasing
    auto it = std::partition_point(thresholds.begin(), thresholds.end(), [eps](double t) { return t > eps; });
    return static_cast<int>(it - thresholds.begin());
}

double ApproximationSchedule::count_bound(double eps) const
{
    if (!(eps > 0)) throw std::invalid_argument("error level must be positive");
    return prefactor * std::pow(kappa / eps, 1 / r);
}

Expansion ApproximationSchedule::prefix(double eps) const
{
    Expansion e(terms.n_electrons(), terms.degree_cap());
    int n = count(eps);
    e.reserve(n);
    for (int j = 0; j < n; ++j) e.push_back(terms[j]);
    return e;
}

ApproximationSchedule build_schedule(const Expansion& f, double r, const std::vector<double>& eps_grid)
{
    if (!(r > 0)) throw std::invalid_argument("approximation order r must be positive");
    if (eps_grid.empty()) throw std::invalid_argument("error grid must not be empty");
    for (double e : eps_grid)
        if (!(e > 0)) throw std::invalid_argument("error grid entries must be positive");

    std::vector<double> norms(f.size());
    parallel_for(f.size(), [&](std::size_t i) { norms[i] = term_norm(f[i], 1); });
    std::vector<std::size_t> idx(f.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return norms[a] > norms[b]; });

    ApproximationSchedule s;
    s.r = r;
    s.terms = Expansion(f.n_electrons(), f.degree_cap());
    s.thresholds.assign(f.size(), 0.0);
    double tail = 0;
    for (std::size_t p = f.size(); p-- > 0;) {
        tail += norms[idx[p]];
        s.thresholds[p] = tail;
    }
    for (auto i : idx) s.terms.push_back(f[i]);

    double lo = *std::min_element(eps_grid.begin(), eps_grid.end());
    s.eps_min = lo;
    double kappa = 0;
    for (double e : eps_grid) kappa = std::max(kappa, e * std::pow(double(s.count(e)), r));
    // supremum over [lo, inf) is approached just below each threshold
    for (std::size_t j = 0; j < s.thresholds.size(); ++j)
        if (s.thresholds[j] >= lo) kappa = std::max(kappa, s.thresholds[j] * std::pow(double(j + 1), r));
    s.kappa = kappa;
    return s;
}

ApproximationSchedule build_schedule(const Expansion& f, double r, double eps_target)
{
    if (!(eps_target > 0)) throw std::invalid_argument("target error must be positive");
    double total = 0;
    for (auto& t : f.terms()) total += term_norm(t, 1);
    double lo = eps_target / 10, hi = std::max(total, lo);
    std::vector<double> grid;
    const int n = 25;
    for (int i = 0; i < n; ++i) grid.push_back(lo * std::pow(hi / lo, double(i) / (n - 1)));
    return build_schedule(f, r, grid);
}

long long TruncationSchedule::weighted_count() const
{
    long long s = 0;
    for (std::size_t n = 0; n < this->n.size(); ++n) s += static_cast<long long>(ell_count(int(n))) * this->n[n];
    return s;
}

double schedule_delta(int M, double q1, double r)
{
    return std::pow(double(M), -r) * std::pow((1 - q1) / (1 + q1), 2 * r);
}

TruncationSchedule build_truncation(const ApproximationSchedule& s, const OperatorConfig& cfg,
                                    const MolecularSystem& sys, double epsilon, std::optional<double> delta_override)
{
    if (!(epsilon > 0)) throw std::invalid_argument("truncation parameter must be positive");
    auto ce = contraction_constants(cfg, sys);
    TruncationSchedule t;
    t.r = s.r;
    t.M = ce.M;
    double x = cfg.vartheta * cfg.h / 2;
    t.q1 = std::exp(-x / (s.r + 1));
    t.q2 = std::exp(-x * s.r / (s.r + 1));
    t.delta = delta_override ? *delta_override : schedule_delta(ce.M, t.q1, s.r);
    if (!(t.delta > 0)) throw std::invalid_argument("delta must be positive");
    t.epsilon = epsilon;
    t.k_range = cfg.k_range();
    int nmax = 2 * std::max(std::abs(t.k_range.lo), std::abs(t.k_range.hi));
    for (int n = 0; n <= nmax; ++n) {
        double thr = epsilon / t.delta * std::pow(t.q2, -double(n));
        t.n.push_back(std::isfinite(thr) ? s.count(thr) : 0);
    }
    while (!t.n.empty() && t.n.back() == 0) t.n.pop_back();
    return t;
}

ScheduledApplication apply_T_scheduled(const ApproximationSchedule& u, const TruncationSchedule& trunc,
                                       const OperatorConfig& cfg, const MolecularSystem& sys)
{
    struct Item {
        double tau;
        Term term;
    };
    const KRange kr = trunc.k_range;
    std::vector<std::vector<Item>> per_level(trunc.n.size());
    parallel_for(trunc.n.size(), [&](std::size_t n) {
        int cap = trunc.n[n];
        if (cap <= 0) return;
        double scale = trunc.delta * std::pow(trunc.q2, double(n)) / 2;
        auto& out = per_level[n];
        for (auto [k, l] : level_pairs(int(n))) {
            if (k < kr.lo || k > kr.hi || l < kr.lo || l > kr.hi) continue;
            for (int j = 0; j < cap; ++j) {
                Expansion one(u.terms.n_electrons(), u.terms.degree_cap());
                one.push_back(u.terms[j]);
                Expansion t = apply_Tkl(one, k, l, sys, cfg);
                for (auto& term : t.terms()) out.push_back({scale * u.thresholds[j], term});
            }
        }
    });
    std::vector<Item> all;
    for (auto& v : per_level)
        for (auto& it : v) all.push_back(std::move(it));
    std::stable_sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.tau > b.tau; });

    ScheduledApplication res;
    auto& s = res.schedule;
    s.terms = Expansion(u.terms.n_electrons(), u.terms.degree_cap());
    s.terms.reserve(all.size());
    for (auto& it : all) {
        s.terms.push_back(std::move(it.term));
        s.thresholds.push_back(it.tau);
    }
    s.r = u.r;
    s.kappa = u.kappa / 2;
    s.prefactor = u.prefactor / 2;
    s.eps_min = 0;
    s.generation = u.generation + 1;
    res.expansion = s.terms;
    auto ce = contraction_constants(cfg, sys);
    res.error_bound = ce.alpha / trunc.delta * level_series(trunc.q1) * trunc.epsilon;
    return res;
}

namespace {

void append_bytes(std::string& key, const void* p, std::size_t n)
{
    key.append(static_cast<const char*>(p), n);
}

std::string shape_key(const Term& t)
{
    std::string key;
    append_bytes(key, t.center.data(), sizeof(double) * t.center.size());
    char st = t.precision.is_structured() ? 1 : 0;
    append_bytes(key, &st, 1);
    const Mat& m = t.precision.matrix();
    append_bytes(key, m.data(), sizeof(double) * m.size());
    for (auto& [a, c] : t.poly.terms()) {
        for (auto v : a) append_bytes(key, &v, sizeof(v));
        append_bytes(key, &c, sizeof(c));
    }
    return key;
}

} // namespace

Expansion combine_like_terms(const Expansion& e)
{
    std::unordered_map<std::string, std::size_t> seen;
    Expansion r(e.n_electrons(), e.degree_cap());
    std::vector<double> coeff;
    for (auto& t : e.terms()) {
        auto [it, fresh] = seen.emplace(shape_key(t), r.size());
        if (fresh) {
            r.push_back(t);
            coeff.push_back(t.coeff);
        } else
            coeff[it->second] += t.coeff;
    }
    for (std::size_t i = 0; i < r.size(); ++i) r[i].coeff = coeff[i];
    return drop_zeros(r);
}

double gap_figure(double gamma, double h)
{
    return std::sqrt(gamma) / std::sqrt(h) * std::exp(-M_PI * M_PI / h);
}

PerturbationCertificate perturbation_certificate(const OperatorConfig& cfg, const MolecularSystem& sys,
                                                 double u_semi1, double u_semi2)
{
    auto ce = contraction_constants(cfg, sys);
    if (!(ce.operator_bound < 1)) {
        std::ostringstream os;
        os << "non-contractive configuration: operator_bound = " << ce.operator_bound;
        throw NonContractiveError(os.str());
    }
    PerturbationCertificate c;
    c.eps_V = error_bound(0.5, cfg.h);
    c.eps_G = error_bound(1.0, cfg.h);
    c.eps = std::max(c.eps_V, c.eps_G);
    c.delta_op = ce.theta * std::sqrt(cfg.gamma) * (2 * c.eps + c.eps * c.eps);
    c.operator_bound = ce.operator_bound;
    c.solution_gap_bound = c.delta_op / (1 - ce.operator_bound) * u_semi1;
    c.smoothing_gap = std::sqrt(cfg.gamma) * u_semi2;
    c.gap_figure = gap_figure(cfg.gamma, cfg.h);
    return c;
}

ResidualReport reference_residual(const Expansion& u, const Expansion& f, const OperatorConfig& cfg,
                                  const MolecularSystem& sys, double budget, int widen, int max_terms)
{
    if (budget < 0) throw std::invalid_argument("residual budget must be nonnegative");
    ResidualReport rep;
    rep.budget = budget;
    KRange base = cfg.k_range();
    if (widen < 0) widen = (base.size() + 1) / 2;
    rep.k_range = {base.lo - widen, base.hi + widen};
    const KRange kr = rep.k_range;

    // V_k u_j terms with their |.|_2, |.|_3 weight
    struct VTerm {
        Term t;
        double w;
    };
    std::vector<std::vector<VTerm>> vk(kr.size());
    parallel_for(static_cast<std::size_t>(kr.size()), [&](std::size_t i) {
        Expansion v = apply_Vk(u, kr.lo + int(i), sys, cfg);
        for (auto& t : v.terms()) {
            double w = std::sqrt(std::max(0.0, fourier_seminorm_sq(t, 2) + fourier_seminorm_sq(t, 3)));
            vk[i].push_back({t, w});
        }
    });
    std::vector<double> pre(kr.size());
    for (int l = kr.lo; l <= kr.hi; ++l) pre[l - kr.lo] = gk_prefactor(l, cfg);

    struct Unit {
        double bound;
        int k, i, l;
    };
    std::vector<Unit> units;
    for (int k = 0; k < kr.size(); ++k)
        for (int i = 0; i < int(vk[k].size()); ++i)
            for (int l = 0; l < kr.size(); ++l) {
                if (pre[l] == 0) continue;
                units.push_back({pre[l] * cfg.gamma * vk[k][i].w, k, i, l});
            }
    rep.units = static_cast<long long>(units.size());
    std::stable_sort(units.begin(), units.end(), [](const Unit& a, const Unit& b) { return a.bound < b.bound; });
    std::size_t cut = 0;
    double acc = 0;
    while (cut < units.size() && acc + units[cut].bound <= budget) acc += units[cut++].bound;
    rep.slack_bound = acc;
    rep.units_kept = static_cast<long long>(units.size() - cut);

    Expansion r = u - f;
    if (2 * rep.units_kept + static_cast<long long>(r.size()) > max_terms) {
        std::ostringstream os;
        os << "reference residual needs " << 2 * rep.units_kept << " operator terms, limit " << max_terms;
        throw ComputationError(os.str());
    }
    for (std::size_t c = cut; c < units.size(); ++c) {
        const Unit& un = units[c];
        const Term& v = vk[un.k][un.i].t;
        double a = 2 * std::exp((kr.lo + un.l) * cfg.h);
        Term p = apply_gaussian_multiplier(v, a);
        p.coeff *= pre[un.l];
        Term m = apply_gaussian_multiplier(v, a + 2 * cfg.gamma);
        m.coeff *= -pre[un.l];
        if (p.coeff != 0) r.push_back(std::move(p));
        if (m.coeff != 0) r.push_back(std::move(m));
    }
    r = combine_like_terms(r);
    rep.measured_terms = static_cast<int>(r.size());
    rep.norm = r.empty() ? 0.0 : sobolev_norm(r, 1);
    return rep;
}

double neumann_count_bound(double kappa, double epsilon, double r)
{
    return 2 * std::pow(2 * kappa / epsilon, 1 / r);
}

SolveResult neumann_solve(const Expansion& f, const OperatorConfig& cfg, const MolecularSystem& sys, double epsilon,
                          double r, const SolveOptions& opt)
{
    if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
    if (!(r > 0)) throw std::invalid_argument("approximation order r must be positive");
    if (f.n_electrons() != sys.n_electrons) throw std::invalid_argument("right-hand side and system electron counts differ");
    auto ce = contraction_constants(cfg, sys);
    SolveReport rep;
    rep.epsilon = epsilon;
    rep.r = r;
    rep.gamma = cfg.gamma;
    rep.alpha = ce.alpha;
    rep.alpha_bound = alpha_admissible_bound(cfg, sys, r);
    rep.admissible = ce.alpha <= rep.alpha_bound;
    rep.operator_bound = ce.operator_bound;
    if (!(ce.operator_bound < 0.5)) {
        std::ostringstream os;
        os << "non-contractive configuration: operator_bound = " << ce.operator_bound << " (must be below 1/2)";
        throw NonContractiveError(os.str());
    }
    if (!rep.admissible && opt.require_admissible) {
        std::ostringstream os;
        os << "alpha = " << ce.alpha << " exceeds the admissible bound " << rep.alpha_bound;
        throw NonContractiveError(os.str());
    }

    ApproximationSchedule sched = build_schedule(f, r, epsilon);
    rep.kappa = sched.kappa;
    double F = sched.thresholds.empty() ? 0.0 : sched.thresholds.front();
    double ob = ce.operator_bound;

    Expansion u(f.n_electrons(), f.degree_cap());
    double eps0 = epsilon / 2;
    Expansion lev0 = sched.prefix(eps0);
    u += lev0;
    rep.levels.push_back({0, eps0, int(lev0.size()), sched.count_bound(eps0), 0.0});

    int nu = 1;
    for (;; ++nu) {
        double eps_nu = std::ldexp(epsilon, -(nu + 1));
        double head = std::pow(ob, nu) * F;
        if (head <= eps_nu) {
            rep.series_tail_bound = head / (1 - ob);
            break;
        }
        if (nu > opt.max_levels) throw InvariantViolation("level limit reached before the series tail fit the budget");
        TruncationSchedule tr = build_truncation(sched, cfg, sys, 2 * eps_nu, opt.delta_override);
        if (nu == 1) {
            rep.delta = tr.delta;
            rep.q1 = tr.q1;
            rep.q2 = tr.q2;
        }
        ScheduledApplication app = apply_T_scheduled(sched, tr, cfg, sys);
        sched = std::move(app.schedule);
        Expansion lev = sched.prefix(eps_nu);
        if (nu % 2 == 1) lev *= -1.0;
        u += lev;
        double cb = sched.count_bound(eps_nu);
        rep.levels.push_back({nu, eps_nu, int(lev.size()), cb, app.error_bound});
    }
    rep.levels_used = nu;
    if (rep.delta == 0) {
        auto tr = build_truncation(sched, cfg, sys, epsilon, opt.delta_override);
        rep.delta = tr.delta;
        rep.q1 = tr.q1;
        rep.q2 = tr.q2;
    }

    rep.term_count = static_cast<int>(u.size());
    rep.count_bound = neumann_count_bound(rep.kappa, epsilon, r);
    rep.count_bound_holds = rep.term_count <= rep.count_bound * (1 + 1e-12);
    if (!rep.count_bound_holds && rep.admissible && !opt.delta_override) {
        std::ostringstream os;
        os << "term budget overrun: " << rep.term_count << " terms, bound " << rep.count_bound;
        throw InvariantViolation(os.str());
    }
    bool trivial = true;
    for (std::size_t i = 1; i < rep.levels.size(); ++i)
        if (rep.levels[i].terms > 0) trivial = false;
    if (trivial && rep.levels.size() > 1) rep.note = "operator levels empty at this tolerance; u is a prefix of f";

    if (opt.measure_residual)
        rep.residual = reference_residual(u, f, cfg, sys, opt.residual_budget_fraction * epsilon);

    double s1 = u.empty() ? 0.0 : std::sqrt(std::max(0.0, sobolev_semi_inner(u, u, 1)));
    double s2 = u.empty() ? 0.0 : std::sqrt(std::max(0.0, sobolev_semi_inner(u, u, 2)));
    rep.certificate = perturbation_certificate(cfg, sys, s1, s2);
    return {std::move(u), std::move(rep)};
}

} // namespace gausskern
