#include <gausskern/operators.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gausskern {

double MolecularSystem::total_charge() const
{
    double z = 0;
    for (auto& n : nuclei) z += n.charge;
    return z;
}

Eigen::Vector3d MolecularSystem::charge_centroid() const
{
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    double z = total_charge();
    if (z <= 0) return c;
    for (auto& n : nuclei) c += n.charge * n.position;
    return c / z;
}

void MolecularSystem::validate() const
{
    if (n_electrons < 1) throw std::invalid_argument("N must be at least 1");
    if (nuclei.empty()) throw std::invalid_argument("at least one nucleus is required");
    for (auto& n : nuclei) {
        if (!(n.charge > 0)) throw std::invalid_argument("nuclear charges must be positive");
        if (!n.position.allFinite()) throw std::invalid_argument("nuclear positions must be finite");
    }
}

MolecularSystem hydrogen_like(double Z, int n_electrons)
{
    MolecularSystem s;
    s.n_electrons = n_electrons;
    s.nuclei.push_back({Eigen::Vector3d::Zero(), Z});
    return s;
}

void OperatorConfig::validate() const
{
    if (!(lambda < 0)) throw std::invalid_argument("lambda must be negative");
    if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("gamma must lie in (0,1)");
    if (!(h > 0)) throw std::invalid_argument("h must be positive");
    if (!(vartheta > 0 && vartheta < 0.5)) throw std::invalid_argument("vartheta must lie in (0,1/2)");
    if (!(r_min > 0 && r_max > r_min)) throw std::invalid_argument("need 0 < r_min < r_max");
    if (!(tail_tol > 0)) throw std::invalid_argument("tail_tol must be positive");
}

KRange OperatorConfig::k_range() const
{
    if (has_k_range()) return {k_lo, k_hi};
    return default_k_range(*this);
}

KRange default_k_range(const OperatorConfig& cfg)
{
    KRange v = exp_sum_range(0.5, cfg.h, cfg.r_min * cfg.r_min, cfg.r_max * cfg.r_max, cfg.tail_tol);
    KRange g = exp_sum_range(1.0, cfg.h, cfg.r_min, cfg.r_max, cfg.tail_tol);
    return {std::min(v.lo, g.lo), std::max(v.hi, g.hi)};
}

double theta_const(int N, double Z)
{
    return (2 * Z + N - 1) * std::sqrt(static_cast<double>(N));
}

double kappa_theta(double t)
{
    return 1 / std::sqrt(M_PI) * std::pow((2 + 2 * t) / M_E, (1 + t) / 2) * 2 / (t * (1 - 2 * t));
}

double kappa_star(double lambda, double t)
{
    return std::max(1.0, std::pow(-t / (lambda * M_E), t));
}

int interaction_count(const MolecularSystem& sys)
{
    int N = sys.n_electrons;
    return sys.n_nuclei() * N + N * (N - 1) / 2;
}

int M_const(const MolecularSystem& sys)
{
    return 4 * interaction_count(sys);
}

double alpha_const(const OperatorConfig& cfg, const MolecularSystem& sys)
{
    double t = cfg.vartheta;
    double N = sys.n_electrons;
    double Z = sys.total_charge();
    return kappa_star(cfg.lambda, t) * kappa_theta(t) * (t * cfg.h) * (t * cfg.h) * (2 * Z + N - 1) *
           std::pow(N, (1 + t) / 2) / (4 * std::sqrt(2.0)) * std::pow(cfg.gamma, 0.5 - t);
}

ContractionEstimate contraction_constants(const OperatorConfig& cfg, const MolecularSystem& sys)
{
    cfg.validate();
    sys.validate();
    ContractionEstimate c;
    c.theta = theta_const(sys.n_electrons, sys.total_charge());
    c.kappa = kappa_theta(cfg.vartheta);
    c.kappa_star = kappa_star(cfg.lambda, cfg.vartheta);
    c.alpha = alpha_const(cfg, sys);
    c.q = std::exp(-cfg.vartheta * cfg.h / 2);
    double f = (1 + c.q) / (1 - c.q);
    c.operator_bound = c.alpha * f * f;
    c.M = M_const(sys);
    c.contractive = c.operator_bound < 1;
    return c;
}

double level_series(double q)
{
    double s = 0;
    for (int n = 0; n < 100000; ++n) {
        double t = ell_count(n) * std::pow(q, n);
        s += t;
        if (n > 0 && t < 1e-18 * s) break;
    }
    return s;
}

double phi_weight(int k, double h)
{
    return h / std::sqrt(M_PI) * std::exp(k * h / 2);
}

double phi_precision(int k, double h)
{
    return 2 * std::exp(k * h);
}

std::vector<Factor> interaction_factors(const MolecularSystem& sys, int k, double h)
{
    int N = sys.n_electrons;
    double w = phi_weight(k, h);
    double s = phi_precision(k, h);
    std::vector<Factor> fs;
    for (auto& nuc : sys.nuclei)
        for (int i = 0; i < N; ++i) {
            Factor f;
            f.coeff = -nuc.charge * w;
            f.center = Vec::Zero(3 * N);
            f.center.segment<3>(3 * i) = nuc.position;
            Mat q = Mat::Zero(N, N);
            q(i, i) = s;
            f.precision = Prec::structured(q);
            fs.push_back(std::move(f));
        }
    for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j) {
            Factor f;
            f.coeff = w;
            f.center = Vec::Zero(3 * N);
            Mat q = Mat::Zero(N, N);
            q(i, i) = q(j, j) = s;
            q(i, j) = q(j, i) = -s;
            f.precision = Prec::structured(q);
            fs.push_back(std::move(f));
        }
    return fs;
}

namespace {

void check_dim(const Expansion& e, const MolecularSystem& sys)
{
    if (e.n_electrons() != sys.n_electrons) throw std::invalid_argument("expansion and system electron counts differ");
}

} // namespace

Expansion apply_Vk(const Expansion& e, int k, const MolecularSystem& sys, const OperatorConfig& cfg)
{
    check_dim(e, sys);
    auto fs = interaction_factors(sys, k, cfg.h);
    std::vector<Term> out(e.size() * fs.size());
    parallel_for(e.size(), [&](std::size_t i) {
        for (std::size_t j = 0; j < fs.size(); ++j) out[i * fs.size() + j] = product(e[i], fs[j]);
    });
    Expansion r(e.n_electrons(), e.degree_cap());
    r.reserve(out.size());
    for (auto& t : out) r.push_back(std::move(t));
    return drop_zeros(r);
}

double gk_prefactor(int k, const OperatorConfig& cfg)
{
    double ekh = std::exp(k * cfg.h);
    return cfg.h * std::exp(ekh * cfg.lambda + k * cfg.h);
}

Expansion apply_Gk(const Expansion& e, int k, const OperatorConfig& cfg)
{
    double s = gk_prefactor(k, cfg);
    double a = 2 * std::exp(k * cfg.h);
    Expansion r(e.n_electrons(), e.degree_cap());
    if (s == 0) return r;
    std::vector<Term> out(e.size());
    parallel_for(e.size(), [&](std::size_t i) {
        out[i] = apply_gaussian_multiplier(e[i], a);
        out[i].coeff *= s;
    });
    for (auto& t : out) r.push_back(std::move(t));
    return drop_zeros(r);
}

Expansion apply_Q(const Expansion& e, const OperatorConfig& cfg)
{
    if (!(cfg.gamma > 0 && cfg.gamma < 1)) throw std::invalid_argument("gamma must lie in (0,1)");
    Expansion r(e.n_electrons(), e.degree_cap());
    for (auto& t : e.terms()) r.push_back(apply_gaussian_multiplier(t, 2 * cfg.gamma));
    return r;
}

Expansion apply_P(const Expansion& e, const OperatorConfig& cfg)
{
    Expansion r = e;
    Expansion q = apply_Q(e, cfg);
    for (auto& t : q.terms()) {
        Term m = t;
        m.coeff = -m.coeff;
        r.push_back(std::move(m));
    }
    return r;
}

Expansion apply_Tkl(const Expansion& e, int k, int l, const MolecularSystem& sys, const OperatorConfig& cfg)
{
    Expansion v = apply_Vk(e, k, sys, cfg);
    double s = gk_prefactor(l, cfg);
    double a = 2 * std::exp(l * cfg.h);
    Expansion r(e.n_electrons(), e.degree_cap());
    if (s == 0) return r;
    std::vector<Term> out(2 * v.size());
    parallel_for(v.size(), [&](std::size_t i) {
        out[2 * i] = apply_gaussian_multiplier(v[i], a);
        out[2 * i].coeff *= s;
        out[2 * i + 1] = apply_gaussian_multiplier(v[i], a + 2 * cfg.gamma);
        out[2 * i + 1].coeff *= -s;
    });
    for (auto& t : out) r.push_back(std::move(t));
    return drop_zeros(r);
}

int ell_count(int n)
{
    if (n < 0) throw std::invalid_argument("level must be nonnegative");
    return std::max(1, 4 * n);
}

std::vector<std::pair<int, int>> level_pairs(int n)
{
    std::vector<std::pair<int, int>> p;
    for (int k = -n; k <= n; ++k) {
        int r = n - std::abs(k);
        if (r == 0)
            p.emplace_back(k, 0);
        else {
            p.emplace_back(k, -r);
            p.emplace_back(k, r);
        }
    }
    return p;
}

Expansion apply_T_tilde(const Expansion& e, const OperatorConfig& cfg, const MolecularSystem& sys,
                        const TTildeOptions& opt)
{
    auto ce = contraction_constants(cfg, sys);
    if (!ce.contractive && !opt.override_contractive) {
        std::ostringstream os;
        os << "non-contractive configuration: operator_bound = " << ce.operator_bound;
        throw NonContractiveError(os.str());
    }
    check_dim(e, sys);
    Expansion out(e.n_electrons(), e.degree_cap());

    if (opt.level_caps) {
        const auto& caps = *opt.level_caps;
        for (std::size_t n = 0; n < caps.size(); ++n) {
            int cap = std::min<int>(caps[n], static_cast<int>(e.size()));
            if (cap <= 0) continue;
            Expansion head(e.n_electrons(), e.degree_cap());
            for (int j = 0; j < cap; ++j) head.push_back(e[j]);
            for (auto [k, l] : level_pairs(static_cast<int>(n))) out += apply_Tkl(head, k, l, sys, cfg);
        }
        return out;
    }

    KRange kr = opt.k_range ? *opt.k_range : cfg.k_range();
    // V_k e is shared by every l
    std::vector<Expansion> vk(kr.size());
    parallel_for(static_cast<std::size_t>(kr.size()),
                 [&](std::size_t i) { vk[i] = apply_Vk(e, kr.lo + static_cast<int>(i), sys, cfg); });
    int nmax = std::max(std::abs(kr.lo), std::abs(kr.hi)) * 2;
    for (int n = 0; n <= nmax; ++n)
        for (auto [k, l] : level_pairs(n)) {
            if (k < kr.lo || k > kr.hi || l < kr.lo || l > kr.hi) continue;
            double s = gk_prefactor(l, cfg);
            if (s == 0) continue;
            double a = 2 * std::exp(l * cfg.h);
            const Expansion& v = vk[k - kr.lo];
            for (auto& t : v.terms()) {
                Term p = apply_gaussian_multiplier(t, a);
                p.coeff *= s;
                Term m = apply_gaussian_multiplier(t, a + 2 * cfg.gamma);
                m.coeff *= -s;
                if (p.coeff != 0) out.push_back(std::move(p));
                if (m.coeff != 0) out.push_back(std::move(m));
            }
        }
    return out;
}

double alpha_admissible_bound(const OperatorConfig& cfg, const MolecularSystem& sys, double r)
{
    double q1 = std::exp(-(1 / (r + 1)) * (cfg.vartheta * cfg.h / 2));
    double M = M_const(sys);
    return 1 / (2 * std::pow(M, r)) * std::pow((1 - q1) / (1 + q1), 2 * r + 2);
}

GammaSelection select_gamma(const OperatorConfig& draft, const MolecularSystem& sys, double r)
{
    if (r < 0) throw std::invalid_argument("approximation order r must be nonnegative");
    sys.validate();
    OperatorConfig cfg = draft;
    cfg.gamma = 0.5;
    double bound = alpha_admissible_bound(cfg, sys, r);
    // alpha(gamma) = C gamma^{1/2 - vartheta}
    double expo = 0.5 - cfg.vartheta;
    double C = alpha_const(cfg, sys) / std::pow(cfg.gamma, expo);
    double lg = (std::log(bound) - std::log(C)) / expo;
    double gamma = lg >= 0 ? 1 - 1e-6 : std::exp(lg);
    cfg.gamma = gamma;
    // guard against rounding on the admissible side
    while (alpha_const(cfg, sys) > bound) cfg.gamma *= 1 - 1e-12;
    if (!(cfg.gamma > 1e-300)) throw InvariantViolation("no gamma in (1e-300, 1) satisfies the admissibility condition");
    GammaSelection g;
    g.gamma = cfg.gamma;
    g.alpha = alpha_const(cfg, sys);
    g.alpha_bound = bound;
    g.ratio = g.alpha / bound;
    g.q1 = std::exp(-(1 / (r + 1)) * (cfg.vartheta * cfg.h / 2));
    g.M = M_const(sys);
    g.r = r;
    g.theta_sqrt_gamma = std::sqrt(g.gamma) * theta_const(sys.n_electrons, sys.total_charge());
    g.weak_condition = g.theta_sqrt_gamma < 1;
    return g;
}

} // namespace gausskern
