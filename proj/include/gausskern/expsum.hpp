#ifndef GAUSSKERN_EXPSUM_HPP
#define GAUSSKERN_EXPSUM_HPP

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace gausskern {

// exponential: sum w exp(-e r) ~ r^-beta
// gaussian:    sum w exp(-e r^2) ~ r^-2beta
enum class ExpSumForm { exponential, gaussian };

// measured errors are not asserted below this
inline constexpr double kMeasuredFloor = 1e-13;

template <class S>
struct ExpSumParams {
    S beta = S(1);
    S h = S(0.5);
    S r_min = S(1e-3);
    S r_max = S(1e3);
    S tail_tol = S(1e-16);
};

template <class S>
struct ExpTerm {
    S weight;
    S exponent;
};

template <class S>
struct ExpSum {
    std::vector<ExpTerm<S>> terms;
    int k_lo = 0;
    int k_hi = -1;
    ExpSumForm form = ExpSumForm::exponential;
    S beta = S(1);
    S h = S(0.5);
    S bound = S(0);

    S operator()(S r) const
    {
        S t = form == ExpSumForm::gaussian ? r * r : r;
        S s = S(0);
        for (auto& term : terms) s += term.weight * std::exp(-term.exponent * t);
        return s;
    }

    S exact(S r) const { return std::pow(r, form == ExpSumForm::gaussian ? -S(2) * beta : -beta); }
};

template <class S>
void check_beta(S beta)
{
    if (beta != S(0.5) && beta != S(1)) throw std::invalid_argument("beta must be 1/2 or 1");
}

template <class S>
S error_bound(S beta, S h)
{
    check_beta(beta);
    if (!(h > S(0))) throw std::invalid_argument("h must be positive");
    const S pi = S(M_PI);
    S q = std::exp(-pi * pi / h);
    S eps = std::numeric_limits<S>::epsilon();
    S sum = S(0);
    for (int l = 1; l < 100000; ++l) {
        S ql = std::pow(q, S(l));
        S q4 = std::pow(q, S(4 * l));
        S term = beta == S(0.5) ? ql / std::sqrt(S(1) + q4) : std::sqrt(S(l)) * ql / std::sqrt(S(1) - q4);
        sum += term;
        if (term < S(1e-3) * eps * sum) break;
    }
    return beta == S(0.5) ? S(2) * std::sqrt(S(2)) * sum : S(4) * pi / std::sqrt(h) * sum;
}

struct KRange {
    int lo = 0;
    int hi = -1;
    int size() const { return hi - lo + 1; }
};

// Truncation of sum_k h e^{beta k h}/Gamma(beta) exp(-e^{kh} t) for t in [t_min, t_max].
template <class S>
KRange exp_sum_range(S beta, S h, S t_min, S t_max, S tail_tol)
{
    check_beta(beta);
    if (!(h > S(0)) || !(t_min > S(0)) || !(t_max > t_min) || !(tail_tol > S(0)))
        throw std::invalid_argument("invalid exponential sum parameters");
    S g = std::tgamma(beta);
    KRange r;
    // low end: h e^{beta(k_lo-1)h} / (Gamma (1-e^{-beta h})) <= tol t_max^{-beta}
    S X = tail_tol * std::pow(t_max, -beta) * g * (S(1) - std::exp(-beta * h)) / h;
    r.lo = static_cast<int>(std::floor(std::log(X) / (beta * h))) + 1;
    // high end: first k past the peak whose term drops below tol t_min^{-beta}
    S target = tail_tol * std::pow(t_min, -beta);
    int k = static_cast<int>(std::ceil(std::log(beta / t_min) / h));
    for (;; ++k) {
        S x = std::exp(S(k) * h) * t_min;
        S term = h * std::exp(beta * S(k) * h - x) / g;
        if (x >= beta && term < target) break;
    }
    r.hi = k - 1;
    return r;
}

template <class S>
ExpSum<S> build_exp_sum(const ExpSumParams<S>& p, ExpSumForm form)
{
    check_beta(p.beta);
    if (!(p.h > S(0))) throw std::invalid_argument("h must be positive");
    if (!(p.r_min > S(0)) || !(p.r_max > p.r_min)) throw std::invalid_argument("need 0 < r_min < r_max");
    if (!(p.tail_tol > S(0))) throw std::invalid_argument("tail_tol must be positive");
    S t_min = form == ExpSumForm::gaussian ? p.r_min * p.r_min : p.r_min;
    S t_max = form == ExpSumForm::gaussian ? p.r_max * p.r_max : p.r_max;
    KRange kr = exp_sum_range(p.beta, p.h, t_min, t_max, p.tail_tol);
    if (kr.size() <= 0) throw std::invalid_argument("empty k-range: tail_tol too large for the interval");
    ExpSum<S> e;
    e.k_lo = kr.lo;
    e.k_hi = kr.hi;
    e.form = form;
    e.beta = p.beta;
    e.h = p.h;
    e.bound = error_bound(p.beta, p.h) + p.tail_tol;
    S g = std::tgamma(p.beta);
    e.terms.reserve(kr.size());
    for (int k = kr.lo; k <= kr.hi; ++k)
        e.terms.push_back({p.h * std::exp(p.beta * S(k) * p.h) / g, std::exp(S(k) * p.h)});
    return e;
}

template <class S>
std::vector<S> log_grid(S a, S b, int n)
{
    std::vector<S> g(n);
    for (int i = 0; i < n; ++i)
        g[i] = n == 1 ? a : std::exp(std::log(a) + (std::log(b) - std::log(a)) * S(i) / S(n - 1));
    return g;
}

template <class S>
S sup_relative_error(const ExpSum<S>& e, const std::vector<S>& grid)
{
    S m = S(0);
    for (S r : grid) {
        S ex = e.exact(r);
        m = std::max(m, std::abs(e(r) - ex) / ex);
    }
    return m;
}

struct PhiReport {
    bool ok = true;
    double bound = 0;
    double tolerance = 0;
    std::vector<double> s;
    std::vector<double> phi;
    std::vector<double> deviation;
    std::vector<double> period_gap;
    int first_violation = -1;
    double excess = 0;
    std::string message;
};

// phi(s) = sum_k h e^{beta(s+kh)} exp(-e^{s+kh}) / Gamma(beta), periodic in s with period h.
double phi_sum(double beta, double h, double s, const KRange& kr);
PhiReport validate_phi(double beta, double h, const std::vector<double>& s_grid, double tail_tol = 1e-18);

extern template struct ExpSum<double>;

} // namespace gausskern

#endif
