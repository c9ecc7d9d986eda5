#include <gausskern/eigensolver.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <gausskern/errors.hpp>
#include <gausskern/parallel.hpp>

namespace gausskern {

std::string to_string(InvitVariant v)
{
    return v == InvitVariant::potential ? "potential" : "residual";
}

InvitVariant parse_variant(const std::string& s)
{
    if (s == "potential") return InvitVariant::potential;
    if (s == "residual") return InvitVariant::residual;
    throw std::invalid_argument("variant must be 'potential' or 'residual', got '" + s + "'");
}

double eta_const(const MolecularSystem& sys, double mu)
{
    return theta_const(sys.n_electrons, sys.total_charge()) / std::sqrt(mu);
}

double c_eta(double eta)
{
    if (!(eta >= 0 && eta < 2)) throw std::invalid_argument("eta must lie in [0,2)");
    return (2 + eta) / (2 - eta);
}

double preconditioner_accuracy(const MolecularSystem& sys, double mu)
{
    double e = eta_const(sys, mu);
    return std::sqrt(c_eta(e)) * e;
}

double admissible_mu(const MolecularSystem& sys, double target)
{
    if (!(target > 0)) throw std::invalid_argument("target accuracy must be positive");
    // sqrt(c(eta)) eta is increasing on [0,2)
    double lo = 0, hi = 2;
    for (int i = 0; i < 200; ++i) {
        double m = 0.5 * (lo + hi);
        (std::sqrt(c_eta(m)) * m <= target ? lo : hi) = m;
    }
    double th = theta_const(sys.n_electrons, sys.total_charge());
    return th * th / (lo * lo);
}

double effective_mu(const InverseIterationConfig& cfg, const MolecularSystem& sys)
{
    return cfg.mu > 0 ? cfg.mu : admissible_mu(sys, 0.99 * cfg.delta_tol);
}

void InverseIterationConfig::validate(const MolecularSystem& sys) const
{
    sys.validate();
    if (!(delta_tol > 0 && delta_tol < 1)) throw std::invalid_argument("delta_tol must lie in (0,1)");
    if (mu < 0) throw std::invalid_argument("mu must be positive (or 0 for automatic)");
    if (max_iter < 0) throw std::invalid_argument("max_iter must be nonnegative");
    if (!(h > 0)) throw std::invalid_argument("h must be positive");
    if (n_work < 1) throw std::invalid_argument("n_work must be at least 1");
    if (dict_size < 0 || !(dict_lo > 0) || !(dict_hi >= dict_lo)) throw std::invalid_argument("invalid dictionary range");
    if (!(init_precision > 0)) throw std::invalid_argument("init_precision must be positive");
    if (prune_fraction < 0) throw std::invalid_argument("prune_fraction must be nonnegative");
    if (potential == PotentialKind::harmonic) return;
    double th = theta_const(sys.n_electrons, sys.total_charge());
    double m = effective_mu(*this, sys);
    if (!(m > th * th / 4)) {
        std::ostringstream os;
        os << "mu = " << m << " violates mu > theta^2/4 = " << th * th / 4;
        throw std::invalid_argument(os.str());
    }
    double acc = preconditioner_accuracy(sys, m);
    if (acc > delta_tol) {
        std::ostringstream os;
        os << "mu = " << m << " gives sqrt(c(eta)) eta = " << acc << " > delta_tol = " << delta_tol;
        throw std::invalid_argument(os.str());
    }
}

KRange potential_k_range(const InverseIterationConfig& cfg)
{
    return exp_sum_range(0.5, cfg.h, cfg.r_min * cfg.r_min, cfg.r_max * cfg.r_max, cfg.tail_tol);
}

namespace {

Term times_r2(const Term& t)
{
    int d = t.dim();
    Poly<double> q(d);
    double a2 = 0;
    for (int j = 0; j < d; ++j) {
        MultiIndex m(d, 0);
        m[j] = 2;
        q.add(m, 1.0);
        MultiIndex l(d, 0);
        l[j] = 1;
        q.add(l, 2 * t.center(j));
        a2 += t.center(j) * t.center(j);
    }
    q.add(MultiIndex(d, 0), a2);
    Term r = t;
    r.poly = t.poly * q;
    return r;
}

std::vector<Factor> potential_factors(const MolecularSystem& sys, const InverseIterationConfig& cfg)
{
    KRange kr = potential_k_range(cfg);
    std::vector<Factor> fs;
    for (int k = kr.lo; k <= kr.hi; ++k)
        for (auto& f : interaction_factors(sys, k, cfg.h)) fs.push_back(f);
    return fs;
}

double term_potential_inner(const Term& a, const Term& b, const std::vector<Factor>& fs, PotentialKind kind)
{
    if (kind == PotentialKind::harmonic) return l2_inner(a, times_r2(b));
    double s = 0;
    for (auto& f : fs) s += l2_inner(a, product(b, f));
    return s;
}

} // namespace

Expansion apply_potential(const Expansion& u, const MolecularSystem& sys, const InverseIterationConfig& cfg)
{
    Expansion r(u.n_electrons(), u.degree_cap());
    if (cfg.potential == PotentialKind::harmonic) {
        for (auto& t : u.terms()) r.push_back(times_r2(t));
        return r;
    }
    auto fs = potential_factors(sys, cfg);
    for (auto& t : u.terms())
        for (auto& f : fs) r.push_back(product(t, f));
    return drop_zeros(r);
}

double potential_inner(const Expansion& a, const Expansion& b, const MolecularSystem& sys,
                       const InverseIterationConfig& cfg)
{
    std::vector<Factor> fs;
    if (cfg.potential == PotentialKind::coulomb) fs = potential_factors(sys, cfg);
    std::vector<double> row(a.size());
    parallel_for(a.size(), [&](std::size_t i) {
        double s = 0;
        for (auto& t : b.terms()) s += term_potential_inner(a[i], t, fs, cfg.potential);
        row[i] = s;
    });
    double s = 0;
    for (double v : row) s += v;
    return s;
}

RayleighValue rayleigh_value(const Expansion& u, const MolecularSystem& sys, const InverseIterationConfig& cfg)
{
    if (u.empty()) throw std::invalid_argument("Rayleigh quotient of the zero function");
    double n0 = sobolev_semi_inner(u, u, 0);
    if (!(n0 > 0)) throw std::invalid_argument("Rayleigh quotient of the zero function");
    double g = sobolev_semi_inner(u, u, 1);
    double v = potential_inner(u, u, sys, cfg);
    RayleighValue r;
    r.unshifted = (g + v) / n0;
    r.shifted = r.unshifted + effective_mu(cfg, sys);
    if (cfg.potential == PotentialKind::coulomb) {
        double th = theta_const(sys.n_electrons, sys.total_charge());
        r.potential_slack_bound = th * (error_bound(0.5, cfg.h) + cfg.tail_tol) * std::sqrt(std::max(0.0, g / n0));
    }
    return r;
}

double rayleigh(const Expansion& u, const MolecularSystem& sys, const InverseIterationConfig& cfg, bool shifted)
{
    auto r = rayleigh_value(u, sys, cfg);
    return shifted ? r.shifted : r.unshifted;
}

Expansion residual(const Expansion& u, const MolecularSystem& sys, double lambda_shifted,
                   const InverseIterationConfig& cfg)
{
    double mu = effective_mu(cfg, sys);
    Expansion r(u.n_electrons(), u.degree_cap());
    for (auto& t : u.terms()) {
        Term l = laplacian(t);
        l.coeff = -l.coeff;
        r.push_back(std::move(l));
    }
    r += u * (mu - lambda_shifted);
    r += apply_potential(u, sys, cfg);
    return drop_zeros(r);
}

KRange resolvent_k_range(double mu, double h, double s_max, double tail_tol)
{
    if (!(mu > 0)) throw std::invalid_argument("mu must be positive");
    return exp_sum_range(1.0, h, mu, std::max(s_max, 2 * mu), tail_tol);
}

Expansion apply_resolvent(const Expansion& f, double mu, double h, double s_max, double tail_tol)
{
    KRange kr = resolvent_k_range(mu, h, s_max, tail_tol);
    Expansion r(f.n_electrons(), f.degree_cap());
    for (int k = kr.lo; k <= kr.hi; ++k) {
        double ekh = std::exp(k * h);
        double w = h * ekh * std::exp(-ekh * mu);
        if (w == 0) continue;
        for (auto& t : f.terms()) {
            Term m = apply_gaussian_multiplier(t, 2 * ekh);
            m.coeff *= w;
            if (m.coeff != 0) r.push_back(std::move(m));
        }
    }
    return r;
}

double rate_bound(double lambda, double l1, double l2, double delta)
{
    if (!(l1 > 0 && l1 < l2)) throw std::invalid_argument("rate bound needs 0 < lambda1 < lambda2");
    if (!(lambda >= l1 && lambda <= l2)) throw std::invalid_argument("lambda must lie in [lambda1, lambda2]");
    if (!(delta >= 0 && delta < 1)) throw std::invalid_argument("delta must lie in [0,1)");
    double a = 1 - delta * delta;
    double d = l2 - lambda;
    return 1 - a * lambda * d * d / (l2 * l2 * lambda + a * d * d * (lambda - l1));
}

Expansion initial_guess(const MolecularSystem& sys, double precision)
{
    sys.validate();
    int N = sys.n_electrons;
    Vec c(3 * N);
    Eigen::Vector3d z = sys.charge_centroid();
    for (int i = 0; i < N; ++i) c.segment<3>(3 * i) = z;
    Expansion u(N);
    u.push_back(make_gaussian(1.0, c, Prec::identity(N, precision)));
    u *= 1 / sobolev_norm(u, 0);
    return u;
}

InvitWorkspace::InvitWorkspace(const MolecularSystem& sys, const Expansion& u0, const InverseIterationConfig& cfg)
    : sys_(sys), cfg_(cfg), mu_(effective_mu(cfg, sys))
{
    cfg.validate(sys);
    int N = sys.n_electrons;
    if (u0.n_electrons() != N) throw std::invalid_argument("initial guess and system electron counts differ");
    dict_ = Expansion(N, u0.degree_cap());
    for (auto& t : u0.terms()) {
        Term g = t;
        g.coeff = 1;
        dict_.push_back(g);
    }
    for (auto& nuc : sys.nuclei) {
        Vec c(3 * N);
        for (int i = 0; i < N; ++i) c.segment<3>(3 * i) = nuc.position;
        for (int j = 0; j < cfg.dict_size; ++j) {
            double p = cfg.dict_size == 1 ? cfg.dict_lo
                                          : cfg.dict_lo * std::pow(cfg.dict_hi / cfg.dict_lo, double(j) / (cfg.dict_size - 1));
            Term g = make_gaussian(1.0, c, Prec::identity(N, p));
            g.coeff = 1 / std::sqrt(l2_inner(g, g));
            dict_.push_back(g);
        }
    }
    int n = static_cast<int>(dict_.size());
    S_ = Mat::Zero(n, n);
    T_ = Mat::Zero(n, n);
    V_ = Mat::Zero(n, n);
    std::vector<Factor> fs;
    if (cfg.potential == PotentialKind::coulomb) fs = potential_factors(sys, cfg);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        for (int j = 0; j <= int(i); ++j) {
            S_(i, j) = l2_inner(dict_[i], dict_[j]);
            T_(i, j) = gradient_inner(dict_[i], dict_[j]);
            V_(i, j) = term_potential_inner(dict_[i], dict_[j], fs, cfg.potential);
        }
    });
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) {
            S_(j, i) = S_(i, j);
            T_(j, i) = T_(i, j);
            V_(j, i) = V_(i, j);
        }
    B_ = T_ + mu_ * S_;
}

Expansion InvitWorkspace::expand(const Vec& c) const
{
    Expansion e(dict_.n_electrons(), dict_.degree_cap());
    for (int i = 0; i < c.size(); ++i)
        if (c(i) != 0) {
            Term t = dict_[i];
            t.coeff *= c(i);
            e.push_back(std::move(t));
        }
    return e;
}

double InvitWorkspace::rayleigh_shifted(const Vec& c) const
{
    double n0 = c.dot(S_ * c);
    if (!(n0 > 0)) throw std::invalid_argument("Rayleigh quotient of the zero function");
    return c.dot((T_ + V_) * c) / n0 + mu_;
}

Vec InvitWorkspace::rhs_potential(const Vec& c, double lam) const
{
    return lam * (S_ * c) - V_ * c;
}

Vec InvitWorkspace::rhs_residual(const Vec& c, double lam) const
{
    // (g_i, -Lap u) through the explicit Laplacian of u
    Expansion u = expand(c);
    Expansion lu(u.n_electrons(), u.degree_cap() + 2);
    for (auto& t : u.terms()) lu.push_back(laplacian(t));
    Vec r(dict_.size());
    parallel_for(dict_.size(), [&](std::size_t i) {
        double s = 0;
        for (auto& t : lu.terms()) s -= l2_inner(dict_[i], t);
        r(i) = s;
    });
    r += (mu_ - lam) * (S_ * c) + V_ * c;
    // new iterate solves b(u', g) = b(u, g) - (g, r)
    return B_ * c - r;
}

InvitWorkspace::Step InvitWorkspace::step(const Vec& c) const
{
    Step st;
    st.lambda_in = rayleigh_shifted(c);
    Vec rhs = cfg_.variant == InvitVariant::potential ? rhs_potential(c, st.lambda_in) : rhs_residual(c, st.lambda_in);
    int n = static_cast<int>(rhs.size());

    Vec res = B_ * c - rhs;
    st.residual_norm = std::sqrt(std::max(0.0, res.dot(B_.ldlt().solve(res))));

    // greedy working space in the b inner product
    std::vector<int> sel;
    std::vector<char> used(n, 0);
    Vec r = rhs;
    Vec cw;
    int nw = std::min(cfg_.n_work, n);
    for (int it = 0; it < nw; ++it) {
        int best = -1;
        double bs = -1;
        for (int i = 0; i < n; ++i) {
            if (used[i]) continue;
            double s = std::abs(r(i)) / std::sqrt(B_(i, i));
            if (s > bs) {
                bs = s;
                best = i;
            }
        }
        if (best < 0) break;
        sel.push_back(best);
        used[best] = 1;
        int m = static_cast<int>(sel.size());
        Mat Bw(m, m);
        Vec rw(m);
        for (int a = 0; a < m; ++a) {
            rw(a) = rhs(sel[a]);
            for (int b = 0; b < m; ++b) Bw(a, b) = B_(sel[a], sel[b]);
        }
        cw = Bw.ldlt().solve(rw);
        r = rhs;
        for (int a = 0; a < m; ++a) r -= B_.col(sel[a]) * cw(a);
    }
    Vec next = Vec::Zero(n);
    for (std::size_t a = 0; a < sel.size(); ++a) next(sel[a]) = cw(a);

    // H^1 Gram for norms
    Mat G = S_ + T_;
    Vec d = c - next;
    st.update_norm = std::sqrt(std::max(0.0, d.dot(G * d)));
    double budget = cfg_.delta_tol * cfg_.prune_fraction * st.update_norm;
    std::vector<std::pair<double, int>> tn;
    for (int i = 0; i < n; ++i)
        if (next(i) != 0) tn.push_back({std::abs(next(i)) * std::sqrt(G(i, i)), i});
    std::stable_sort(tn.begin(), tn.end());
    double acc = 0;
    for (auto [v, i] : tn) {
        if (acc + v > budget) break;
        acc += v;
        next(i) = 0;
        ++st.pruned;
    }
    double n0 = next.dot(S_ * next);
    if (!(n0 > 0)) throw InvariantViolation("inverse-iteration step produced the zero function");
    st.c = next / std::sqrt(n0);
    st.terms = static_cast<int>((st.c.array() != 0).count());
    return st;
}

namespace {

void fill_rates(IterationHistory& h, const InverseIterationConfig& cfg, double lambda_ref)
{
    auto& R = h.records;
    h.rate_checked = cfg.lambda1 && cfg.lambda2;
    for (std::size_t k = 0; k + 1 < R.size(); ++k) {
        double den = R[k].rayleigh_shifted - lambda_ref;
        R[k].measured_ratio = den > 0 ? (R[k + 1].rayleigh_shifted - lambda_ref) / den : 0.0;
        if (!h.rate_checked) continue;
        double l = R[k].rayleigh_shifted;
        if (l < *cfg.lambda1 || l > *cfg.lambda2) continue;
        R[k].rate_bound = rate_bound(l, *cfg.lambda1, *cfg.lambda2, cfg.delta_tol);
        R[k].rate_ok = R[k].measured_ratio <= R[k].rate_bound + cfg.rate_slack;
        if (!R[k].rate_ok) h.rate_ok = false;
    }
}

} // namespace

InvitStepResult invit_step(const Expansion& u, const MolecularSystem& sys, const InverseIterationConfig& cfg)
{
    InvitWorkspace ws(sys, u, cfg);
    Vec c = Vec::Zero(ws.dictionary().size());
    for (std::size_t i = 0; i < u.size(); ++i) c(i) = u[i].coeff;
    double n0 = c.dot(ws.S() * c);
    if (!(n0 > 0)) throw std::invalid_argument("inverse-iteration step from the zero function");
    c /= std::sqrt(n0);
    auto st = ws.step(c);
    InvitStepResult r;
    r.u = ws.expand(st.c);
    r.record.rayleigh_shifted = st.lambda_in;
    r.record.rayleigh = st.lambda_in - ws.mu();
    r.record.term_count = st.terms;
    r.record.residual_norm = st.residual_norm;
    r.record.update_norm = st.update_norm;
    return r;
}

InvitResult run_inverse_iteration(const MolecularSystem& sys, const Expansion& u0, const InverseIterationConfig& cfg)
{
    InvitWorkspace ws(sys, u0, cfg);
    InvitResult res;
    auto& H = res.history;
    H.mu = ws.mu();
    if (cfg.potential == PotentialKind::coulomb) {
        H.eta = eta_const(sys, H.mu);
        H.preconditioner_accuracy = preconditioner_accuracy(sys, H.mu);
    }
    Vec c = Vec::Zero(ws.dictionary().size());
    for (std::size_t i = 0; i < u0.size(); ++i) c(i) = u0[i].coeff;
    double n0 = c.dot(ws.S() * c);
    if (!(n0 > 0)) throw std::invalid_argument("initial guess has zero norm");
    c /= std::sqrt(n0);

    if (cfg.max_iter == 0) {
        IterationRecord rec;
        rec.rayleigh_shifted = ws.rayleigh_shifted(c);
        rec.rayleigh = rec.rayleigh_shifted - H.mu;
        rec.term_count = static_cast<int>(u0.size());
        H.records.push_back(rec);
        H.stop_reason = "max_iter";
        res.eigenvalue = rec.rayleigh;
        res.u = u0;
        return res;
    }

    double prev = 0;
    for (int it = 0;; ++it) {
        IterationRecord rec;
        rec.iter = it;
        rec.term_count = static_cast<int>((c.array() != 0).count());
        if (it == cfg.max_iter) {
            rec.rayleigh_shifted = ws.rayleigh_shifted(c);
            rec.rayleigh = rec.rayleigh_shifted - H.mu;
            H.records.push_back(rec);
            H.stop_reason = "max_iter";
            break;
        }
        auto st = ws.step(c);
        rec.rayleigh_shifted = st.lambda_in;
        rec.rayleigh = st.lambda_in - H.mu;
        rec.residual_norm = st.residual_norm;
        rec.update_norm = st.update_norm;
        if (it > 0 && rec.rayleigh_shifted > prev + 1e-12 * std::abs(prev)) {
            H.monotone = false;
            std::ostringstream os;
            os.precision(17);
            os << "Rayleigh value increased at step " << it << ": " << prev - H.mu << " -> " << rec.rayleigh
               << " (mu = " << H.mu << ", terms = " << rec.term_count << ")";
            throw InvariantViolation(os.str());
        }
        H.records.push_back(rec);
        if (it > 0 && std::abs(prev - rec.rayleigh_shifted) < cfg.tol) {
            H.converged = true;
            H.stop_reason = "rayleigh_change";
            break;
        }
        prev = rec.rayleigh_shifted;
        c = st.c;
    }
    const auto& last = H.records.back();
    fill_rates(H, cfg, cfg.lambda1 ? *cfg.lambda1 : last.rayleigh_shifted);
    res.eigenvalue = last.rayleigh;
    res.u = ws.expand(c);
    if (cfg.potential == PotentialKind::coulomb) {
        double th = theta_const(sys.n_electrons, sys.total_charge());
        double g = c.dot(ws.T() * c);
        H.potential_slack_bound = th * (error_bound(0.5, cfg.h) + cfg.tail_tol) * std::sqrt(std::max(0.0, g));
    }
    return res;
}

} // namespace gausskern
