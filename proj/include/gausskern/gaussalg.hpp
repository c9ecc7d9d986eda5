#ifndef GAUSSKERN_GAUSSALG_HPP
#define GAUSSKERN_GAUSSALG_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <gausskern/errors.hpp>
#include <gausskern/parallel.hpp>
#include <gausskern/poly.hpp>

namespace gausskern {

template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using Blocks = Eigen::Matrix<S, Eigen::Dynamic, 3, Eigen::RowMajor>;

// View of x in R^{3N} as an N x 3 matrix, row i = electron i.
template <class S>
Eigen::Map<const Blocks<S>> as_blocks(const VecX<S>& x)
{
    return {x.data(), x.size() / 3, 3};
}

template <class S>
VecX<S> from_blocks(const Blocks<S>& X)
{
    VecX<S> v(X.size());
    Eigen::Map<Blocks<S>>(v.data(), X.rows(), 3) = X;
    return v;
}

// Symmetric matrix, either dense or of the form Q' (x) I_3.
template <class S>
class Precision {
public:
    Precision() = default;

    static Precision structured(MatX<S> reduced)
    {
        Precision p;
        p.structured_ = true;
        p.m_ = std::move(reduced);
        return p;
    }

    static Precision dense(MatX<S> full)
    {
        Precision p;
        p.structured_ = false;
        p.m_ = std::move(full);
        return p;
    }

    static Precision identity(int n_electrons, S s = S(1))
    {
        return structured(MatX<S>::Identity(n_electrons, n_electrons) * s);
    }

    bool is_structured() const { return structured_; }
    const MatX<S>& matrix() const { return m_; }
    int dim() const { return static_cast<int>(structured_ ? 3 * m_.rows() : m_.rows()); }

    MatX<S> full() const
    {
        if (!structured_) return m_;
        int n = static_cast<int>(m_.rows());
        MatX<S> f = MatX<S>::Zero(3 * n, 3 * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int c = 0; c < 3; ++c) f(3 * i + c, 3 * j + c) = m_(i, j);
        return f;
    }

    Precision promoted() const { return structured_ ? dense(full()) : *this; }

    VecX<S> apply(const VecX<S>& x) const
    {
        if (structured_) return from_blocks<S>(m_ * as_blocks(x));
        return m_ * x;
    }

    S quad(const VecX<S>& x, const VecX<S>& y) const { return x.dot(apply(y)); }

    S trace() const { return structured_ ? S(3) * m_.trace() : m_.trace(); }

    Precision operator+(const Precision& o) const
    {
        if (structured_ == o.structured_) {
            Precision r = *this;
            r.m_ += o.m_;
            return r;
        }
        return dense(full() + o.full());
    }

    Precision operator*(S s) const
    {
        Precision r = *this;
        r.m_ *= s;
        return r;
    }

    bool operator==(const Precision& o) const { return structured_ == o.structured_ && m_ == o.m_; }

private:
    bool structured_ = false;
    MatX<S> m_;
};

template <class S>
class Cholesky {
public:
    Cholesky() = default;

    explicit Cholesky(const Precision<S>& p) : structured_(p.is_structured()), llt_(p.matrix())
    {
        if (llt_.info() != Eigen::Success)
            throw FactorizationError("Cholesky factorization failed: matrix not positive definite");
        auto d = llt_.matrixLLT().diagonal();
        for (int i = 0; i < d.size(); ++i)
            if (!(d(i) > S(0)) || !std::isfinite(static_cast<double>(d(i))))
                throw FactorizationError("Cholesky factorization failed: matrix not positive definite");
    }

    VecX<S> solve(const VecX<S>& x) const
    {
        if (structured_) return from_blocks<S>(llt_.solve(MatX<S>(as_blocks(x))));
        return llt_.solve(x);
    }

    S log_det() const
    {
        S s = S(0);
        auto d = llt_.matrixLLT().diagonal();
        for (int i = 0; i < d.size(); ++i) s += std::log(d(i));
        return (structured_ ? S(6) : S(2)) * s;
    }

    Precision<S> inverse() const
    {
        MatX<S> inv = llt_.solve(MatX<S>::Identity(llt_.rows(), llt_.rows()));
        inv = (inv + inv.transpose()) / S(2);
        return structured_ ? Precision<S>::structured(inv) : Precision<S>::dense(inv);
    }

    // A^{-1} M for M of the same storage kind.
    Precision<S> solve(const Precision<S>& m) const
    {
        MatX<S> r = llt_.solve(m.matrix());
        return structured_ ? Precision<S>::structured(r) : Precision<S>::dense(r);
    }

    bool is_structured() const { return structured_; }

private:
    bool structured_ = false;
    Eigen::LLT<MatX<S>> llt_;
};

template <class S>
struct GaussHermiteTerm {
    S coeff = S(0);
    VecX<S> center;
    Precision<S> precision;
    Poly<S> poly;

    int dim() const { return static_cast<int>(center.size()); }
    int degree() const { return poly.degree(); }
    bool is_gaussian() const { return poly.is_constant(); }
    // coefficient with a constant polynomial folded in
    S scalar() const { return poly.is_constant() ? coeff * poly.constant_value() : coeff; }
};

template <class S>
GaussHermiteTerm<S> make_gaussian(S coeff, VecX<S> center, Precision<S> precision)
{
    if (center.size() != precision.dim()) throw std::invalid_argument("center and precision dimensions differ");
    GaussHermiteTerm<S> t;
    t.coeff = coeff;
    t.poly = Poly<S>::constant(static_cast<int>(center.size()), S(1));
    t.center = std::move(center);
    t.precision = std::move(precision);
    return t;
}

template <class S>
struct GaussFactor {
    S coeff = S(1);
    VecX<S> center;
    Precision<S> precision;
    int dim() const { return static_cast<int>(center.size()); }
};

template <class S>
class GaussianExpansion {
public:
    using Term = GaussHermiteTerm<S>;

    GaussianExpansion() = default;
    explicit GaussianExpansion(int n_electrons, int degree_cap = 4) : n_(n_electrons), cap_(degree_cap) {}

    int n_electrons() const { return n_; }
    int dim() const { return 3 * n_; }
    int degree_cap() const { return cap_; }
    void set_degree_cap(int cap) { cap_ = cap; }
    std::size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }
    const std::vector<Term>& terms() const { return terms_; }
    const Term& operator[](std::size_t i) const { return terms_[i]; }
    Term& operator[](std::size_t i) { return terms_[i]; }
    void reserve(std::size_t n) { terms_.reserve(n); }
    void clear() { terms_.clear(); }

    void push_back(Term t)
    {
        if (t.dim() != dim()) throw std::invalid_argument("term dimension does not match expansion");
        if (t.degree() > cap_)
            throw DegreeOverflow("polynomial degree " + std::to_string(t.degree()) + " exceeds degree_cap " +
                                 std::to_string(cap_));
        terms_.push_back(std::move(t));
    }

    GaussianExpansion& operator+=(const GaussianExpansion& o)
    {
        for (auto& t : o.terms_) push_back(t);
        return *this;
    }

    GaussianExpansion& operator*=(S s)
    {
        for (auto& t : terms_) t.coeff *= s;
        return *this;
    }

    friend GaussianExpansion operator*(GaussianExpansion e, S s) { return e *= s; }
    friend GaussianExpansion operator*(S s, GaussianExpansion e) { return e *= s; }
    friend GaussianExpansion operator+(GaussianExpansion a, const GaussianExpansion& b) { return a += b; }
    friend GaussianExpansion operator-(GaussianExpansion a, GaussianExpansion b) { return a += (b *= S(-1)); }

private:
    int n_ = 1;
    int cap_ = 4;
    std::vector<Term> terms_;
};

// ---------------------------------------------------------------------------
// evaluation

template <class S, class T>
T evaluate(const GaussHermiteTerm<S>& t, const T* x)
{
    int d = t.dim();
    std::vector<T> y(d);
    for (int i = 0; i < d; ++i) y[i] = x[i] - T(t.center(i));
    const auto& m = t.precision.matrix();
    T q = T(0);
    if (t.precision.is_structured()) {
        int n = d / 3;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                T s = y[3 * i] * y[3 * j] + y[3 * i + 1] * y[3 * j + 1] + y[3 * i + 2] * y[3 * j + 2];
                q += T(m(i, j)) * s;
            }
    } else {
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) q += T(m(i, j)) * y[i] * y[j];
    }
    return T(t.coeff) * t.poly(y.data()) * std::exp(T(-0.5) * q);
}

template <class S>
S evaluate(const GaussHermiteTerm<S>& t, const VecX<S>& x)
{
    if (x.size() != t.dim()) throw std::invalid_argument("evaluation point has wrong dimension");
    return evaluate<S, S>(t, x.data());
}

template <class S>
S evaluate(const GaussFactor<S>& f, const VecX<S>& x)
{
    VecX<S> y = x - f.center;
    return f.coeff * std::exp(S(-0.5) * f.precision.quad(y, y));
}

template <class S>
S evaluate(const GaussianExpansion<S>& e, const VecX<S>& x)
{
    if (x.size() != e.dim()) throw std::invalid_argument("evaluation point has wrong dimension");
    S s = S(0);
    for (auto& t : e.terms()) s += evaluate<S, S>(t, x.data());
    return s;
}

// ---------------------------------------------------------------------------
// products

// exp(-(x-a1)Q1(x-a1)/2) exp(-(x-a2)Q2(x-a2)/2) = exp(-E/2) exp(-(x-c)A(x-c)/2)
template <class S>
struct Pairing {
    Precision<S> A;
    Cholesky<S> chol;
    VecX<S> c;
    S E = S(0);
};

template <class S>
Pairing<S> pair_gaussians(const VecX<S>& a1, const Precision<S>& Q1, const VecX<S>& a2, const Precision<S>& Q2)
{
    if (a1.size() != a2.size()) throw std::invalid_argument("dimension mismatch");
    Pairing<S> p;
    p.A = Q1 + Q2;
    p.chol = Cholesky<S>(p.A);
    VecX<S> d = a1 - a2;
    VecX<S> q1d = Q1.apply(d);
    VecX<S> z = p.chol.solve(q1d);
    p.c = a2 + z;
    p.E = std::max(S(0), z.dot(Q2.apply(d)));
    return p;
}

template <class S>
GaussHermiteTerm<S> product(const GaussHermiteTerm<S>& t, const GaussFactor<S>& f)
{
    if (t.dim() != f.dim()) throw std::invalid_argument("dimension mismatch in product");
    auto p = pair_gaussians(t.center, t.precision, f.center, f.precision);
    GaussHermiteTerm<S> r;
    r.coeff = t.coeff * f.coeff * std::exp(S(-0.5) * p.E);
    r.poly = t.poly.shifted(VecX<S>(p.c - t.center));
    r.center = std::move(p.c);
    r.precision = std::move(p.A);
    return r;
}

template <class S>
GaussHermiteTerm<S> product(const GaussHermiteTerm<S>& s, const GaussHermiteTerm<S>& t)
{
    if (s.dim() != t.dim()) throw std::invalid_argument("dimension mismatch in product");
    auto p = pair_gaussians(s.center, s.precision, t.center, t.precision);
    GaussHermiteTerm<S> r;
    r.coeff = s.coeff * t.coeff * std::exp(S(-0.5) * p.E);
    r.poly = s.poly.shifted(VecX<S>(p.c - s.center)) * t.poly.shifted(VecX<S>(p.c - t.center));
    r.center = std::move(p.c);
    r.precision = std::move(p.A);
    return r;
}

// ---------------------------------------------------------------------------
// integrals

template <class S>
S integrate(const GaussHermiteTerm<S>& t)
{
    Cholesky<S> ch(t.precision);
    int d = t.dim();
    S base = t.coeff * std::exp(S(0.5) * d * std::log(S(2) * S(M_PI)) - S(0.5) * ch.log_det());
    if (t.poly.is_constant()) return base * t.poly.constant_value();
    GaussMoments<S> mom(ch.inverse().full());
    return base * mom.expectation(t.poly);
}

template <class S>
S l2_inner(const GaussHermiteTerm<S>& s, const GaussHermiteTerm<S>& t)
{
    if (s.dim() != t.dim()) throw std::invalid_argument("dimension mismatch in inner product");
    if (s.is_gaussian() && t.is_gaussian()) {
        auto p = pair_gaussians(s.center, s.precision, t.center, t.precision);
        int d = s.dim();
        S lg = S(0.5) * d * std::log(S(2) * S(M_PI)) - S(0.5) * p.chol.log_det() - S(0.5) * p.E;
        return s.scalar() * t.scalar() * std::exp(lg);
    }
    return integrate(product(s, t));
}

template <class S>
GaussHermiteTerm<S> gradient(const GaussHermiteTerm<S>& t, int j)
{
    MatX<S> Q = t.precision.full();
    GaussHermiteTerm<S> r = t;
    r.poly = t.poly.derivative(j) + t.poly.times_linear(Q.row(j)) * S(-1);
    return r;
}

template <class S>
GaussHermiteTerm<S> laplacian(const GaussHermiteTerm<S>& t)
{
    MatX<S> Q = t.precision.full();
    GaussHermiteTerm<S> r = t;
    Poly<S> acc(t.dim());
    for (int j = 0; j < t.dim(); ++j) {
        Poly<S> g = t.poly.derivative(j) + t.poly.times_linear(Q.row(j)) * S(-1);
        acc += g.derivative(j) + g.times_linear(Q.row(j)) * S(-1);
    }
    r.poly = std::move(acc);
    return r;
}

// sum_j <d_j s, d_j t>
template <class S>
S gradient_inner(const GaussHermiteTerm<S>& s, const GaussHermiteTerm<S>& t)
{
    if (s.is_gaussian() && t.is_gaussian()) {
        auto p = pair_gaussians(s.center, s.precision, t.center, t.precision);
        int d = s.dim();
        S I0 = s.scalar() * t.scalar() *
               std::exp(S(0.5) * d * std::log(S(2) * S(M_PI)) - S(0.5) * p.chol.log_det() - S(0.5) * p.E);
        if (I0 == S(0)) return S(0);
        VecX<S> u = s.precision.apply(VecX<S>(p.c - s.center));
        VecX<S> v = t.precision.apply(VecX<S>(p.c - t.center));
        S tr;
        if (s.precision.is_structured() && t.precision.is_structured()) {
            MatX<S> X = p.chol.solve(t.precision).matrix();
            tr = S(3) * (s.precision.matrix() * X).trace();
        } else {
            MatX<S> X = p.chol.inverse().full();
            tr = (s.precision.full() * X * t.precision.full()).trace();
        }
        return I0 * (tr + u.dot(v));
    }
    S r = S(0);
    for (int j = 0; j < s.dim(); ++j) r += l2_inner(gradient(s, j), gradient(t, j));
    return r;
}

template <class S>
S laplacian_inner(const GaussHermiteTerm<S>& s, const GaussHermiteTerm<S>& t)
{
    return l2_inner(laplacian(s), laplacian(t));
}

// Inner products with Fourier weight (1+|w|^2)^order.
template <class S>
S sobolev_inner(const GaussHermiteTerm<S>& s, const GaussHermiteTerm<S>& t, int order)
{
    switch (order) {
    case 0:
        return l2_inner(s, t);
    case 1:
        return l2_inner(s, t) + gradient_inner(s, t);
    case 2:
        return l2_inner(s, t) + S(2) * gradient_inner(s, t) + laplacian_inner(s, t);
    default:
        throw std::invalid_argument("sobolev order must be 0, 1 or 2");
    }
}

// Seminorm inner products with weight |w|^{2m}.
template <class S>
S sobolev_semi_inner(const GaussHermiteTerm<S>& s, const GaussHermiteTerm<S>& t, int m)
{
    switch (m) {
    case 0:
        return l2_inner(s, t);
    case 1:
        return gradient_inner(s, t);
    case 2:
        return laplacian_inner(s, t);
    default:
        throw std::invalid_argument("seminorm order must be 0, 1 or 2");
    }
}

template <class S, class F>
S expansion_bilinear(const GaussianExpansion<S>& a, const GaussianExpansion<S>& b, F&& f)
{
    if (a.dim() != b.dim()) throw std::invalid_argument("dimension mismatch in inner product");
    std::vector<S> rows(a.size(), S(0));
    parallel_for(a.size(), [&](std::size_t i) {
        S r = S(0);
        for (std::size_t j = 0; j < b.size(); ++j) r += f(a[i], b[j]);
        rows[i] = r;
    });
    return tree_sum(rows);
}

template <class S>
S sobolev_inner(const GaussianExpansion<S>& a, const GaussianExpansion<S>& b, int order)
{
    if (order < 0 || order > 2) throw std::invalid_argument("sobolev order must be 0, 1 or 2");
    return expansion_bilinear(a, b, [order](auto& s, auto& t) { return sobolev_inner(s, t, order); });
}

template <class S>
S sobolev_semi_inner(const GaussianExpansion<S>& a, const GaussianExpansion<S>& b, int m)
{
    if (m < 0 || m > 2) throw std::invalid_argument("seminorm order must be 0, 1 or 2");
    return expansion_bilinear(a, b, [m](auto& s, auto& t) { return sobolev_semi_inner(s, t, m); });
}

template <class S>
S sobolev_norm(const GaussianExpansion<S>& e, int order)
{
    return std::sqrt(std::max(S(0), sobolev_inner(e, e, order)));
}

template <class S>
S term_norm(const GaussHermiteTerm<S>& t, int order = 1)
{
    return std::sqrt(std::max(S(0), sobolev_inner(t, t, order)));
}

template <class S>
MatX<S> gram_matrix(const GaussianExpansion<S>& e, int order)
{
    std::size_t n = e.size();
    MatX<S> G(n, n);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = 0; j <= i; ++j) G(i, j) = sobolev_inner(e[i], e[j], order);
    });
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) G(i, j) = G(j, i);
    return G;
}

// ---------------------------------------------------------------------------
// Fourier side (unitary convention)

template <class S>
struct FourierTerm {
    S scale = S(0);
    VecX<S> phase;          // a in exp(-i a.w)
    Precision<S> precision;  // Q^{-1}
    Poly<std::complex<S>> poly;

    std::complex<S> operator()(const VecX<S>& w) const
    {
        using C = std::complex<S>;
        std::vector<C> wc(w.size());
        for (int i = 0; i < w.size(); ++i) wc[i] = C(w(i));
        S q = precision.quad(w, w);
        return scale * poly(wc.data()) * std::exp(C(S(-0.5) * q, -phase.dot(w)));
    }
};

// D^alpha exp(-x B x / 2) = H_alpha(x) exp(-x B x / 2)
template <class C, class S>
class HermiteFactors {
public:
    explicit HermiteFactors(MatX<S> B) : B_(std::move(B)) {}

    const Poly<C>& operator()(const MultiIndex& a)
    {
        auto it = memo_.find(a);
        if (it != memo_.end()) return it->second;
        int d = static_cast<int>(a.size());
        Poly<C> r(d);
        if (total_degree(a) == 0) {
            r = Poly<C>::constant(d, C(1));
        } else {
            int j = 0;
            while (a[j] == 0) ++j;
            MultiIndex b = a;
            --b[j];
            Poly<C> h = (*this)(b);
            r = h.derivative(j) + h.times_linear(B_.row(j).template cast<C>()) * C(-1);
        }
        return memo_.emplace(a, std::move(r)).first->second;
    }

private:
    MatX<S> B_;
    std::map<MultiIndex, Poly<C>> memo_;
};

inline std::complex<double> ipow(int n, double sign = 1.0)
{
    switch (((n % 4) + 4) % 4) {
    case 0:
        return {1.0, 0.0};
    case 1:
        return {0.0, sign};
    case 2:
        return {-1.0, 0.0};
    default:
        return {0.0, -sign};
    }
}

template <class S>
FourierTerm<S> fourier(const GaussHermiteTerm<S>& t)
{
    using C = std::complex<S>;
    Cholesky<S> ch(t.precision);
    FourierTerm<S> f;
    f.scale = t.coeff * std::exp(S(-0.5) * ch.log_det());
    f.phase = t.center;
    f.precision = ch.inverse();
    int d = t.dim();
    if (t.poly.is_constant()) {
        f.poly = Poly<C>::constant(d, C(t.poly.constant_value()));
        return f;
    }
    HermiteFactors<C, S> H(f.precision.full());
    Poly<C> p(d);
    for (auto& [a, c] : t.poly.terms()) p += H(a) * (C(c) * C(ipow(total_degree(a), 1.0)));
    f.poly = std::move(p);
    return f;
}

namespace detail {

template <class S>
Poly<S> inverse_poly(const Poly<std::complex<S>>& p, const MatX<S>& C_full, S tol_scale)
{
    using C = std::complex<S>;
    int d = p.dim();
    HermiteFactors<C, S> H(C_full);
    Poly<C> acc(d);
    for (auto& [a, c] : p.terms()) acc += H(a) * (c * C(ipow(total_degree(a), -1.0)));
    Poly<S> r(d);
    S mag = S(0);
    for (auto& [a, c] : acc.terms()) mag = std::max(mag, std::abs(c));
    for (auto& [a, c] : acc.terms()) {
        if (std::abs(c.imag()) > S(1e-8) * std::max(mag, tol_scale))
            throw InvariantViolation("inverse Fourier transform produced a complex polynomial");
        r.add(a, c.real());
    }
    return r;
}

} // namespace detail

template <class S>
GaussHermiteTerm<S> inverse_fourier(const FourierTerm<S>& f)
{
    Cholesky<S> ch(f.precision);
    GaussHermiteTerm<S> t;
    t.coeff = f.scale * std::exp(S(-0.5) * ch.log_det());
    t.center = f.phase;
    t.precision = ch.inverse();
    int d = static_cast<int>(f.phase.size());
    if (f.poly.is_constant()) {
        t.poly = Poly<S>::constant(d, f.poly.constant_value().real());
        return t;
    }
    t.poly = detail::inverse_poly(f.poly, t.precision.full(), S(0));
    return t;
}

// Fourier multiplier exp(-alpha |w|^2 / 2).
template <class S>
GaussHermiteTerm<S> apply_gaussian_multiplier(const GaussHermiteTerm<S>& t, S alpha)
{
    if (alpha < S(0)) throw std::invalid_argument("multiplier parameter alpha must be nonnegative");
    if (alpha == S(0)) return t;
    const auto& Q = t.precision;
    Precision<S> M = Q * alpha;
    {
        MatX<S> m = M.matrix();
        m.diagonal().array() += S(1);
        M = Q.is_structured() ? Precision<S>::structured(m) : Precision<S>::dense(m);
    }
    Cholesky<S> chM(M);
    Precision<S> Qn = chM.solve(Q);
    {
        MatX<S> m = Qn.matrix();
        m = (m + m.transpose()).eval() / S(2);
        Qn = Q.is_structured() ? Precision<S>::structured(m) : Precision<S>::dense(m);
    }
    GaussHermiteTerm<S> r;
    r.coeff = t.coeff * std::exp(S(-0.5) * chM.log_det());
    r.center = t.center;
    r.precision = Qn;
    if (t.poly.is_constant()) {
        r.poly = t.poly;
        return r;
    }
    FourierTerm<S> f = fourier(t);
    r.poly = detail::inverse_poly(f.poly, Qn.full(), S(0));
    return r;
}

// |t|_m^2 = int |w|^{2m} |t^(w)|^2 dw for a single term.
template <class S>
S fourier_seminorm_sq(const GaussHermiteTerm<S>& t, int m)
{
    Cholesky<S> ch(t.precision);
    int d = t.dim();
    S base = t.coeff * t.coeff * std::exp(S(0.5) * d * std::log(S(M_PI)) - S(0.5) * ch.log_det());
    if (base == S(0)) return S(0);
    MatX<S> cov = t.precision.full() / S(2);
    if (t.poly.is_constant()) {
        S c0 = t.poly.constant_value();
        base *= c0 * c0;
        MatX<S> P = cov;
        S t1 = P.trace();
        if (m == 0) return base;
        if (m == 1) return base * t1;
        MatX<S> P2 = P * P;
        S t2 = P2.trace();
        if (m == 2) return base * (t1 * t1 + S(2) * t2);
        if (m == 3) return base * (t1 * t1 * t1 + S(6) * t1 * t2 + S(8) * (P2 * P).trace());
    }
    FourierTerm<S> f = fourier(t);
    Poly<S> re(d), im(d);
    for (auto& [a, c] : f.poly.terms()) {
        re.add(a, c.real());
        im.add(a, c.imag());
    }
    Poly<S> w = re * re + im * im;
    Poly<S> r2(d);
    for (int j = 0; j < d; ++j) {
        MultiIndex a(d, 0);
        a[j] = 2;
        r2.add(a, S(1));
    }
    for (int k = 0; k < m; ++k) w = w * r2;
    GaussMoments<S> mom(cov);
    return base * mom.expectation(w);
}

// ---------------------------------------------------------------------------
// pruning

template <class S>
GaussianExpansion<S> drop_zeros(const GaussianExpansion<S>& e)
{
    GaussianExpansion<S> r(e.n_electrons(), e.degree_cap());
    r.reserve(e.size());
    for (auto& t : e.terms())
        if (t.coeff != S(0) && !t.poly.empty()) r.push_back(t);
    return r;
}

template <class S>
struct PruneResult {
    GaussianExpansion<S> expansion;
    S dropped_norm_bound = S(0);
    std::size_t dropped = 0;
};

template <class S>
PruneResult<S> prune_report(const GaussianExpansion<S>& e, S budget)
{
    if (budget < S(0)) throw std::invalid_argument("prune budget must be nonnegative");
    std::vector<S> norms(e.size());
    parallel_for(e.size(), [&](std::size_t i) { norms[i] = term_norm(e[i], 1); });
    std::vector<std::size_t> idx(e.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return norms[a] < norms[b]; });
    std::vector<char> keep(e.size(), 1);
    PruneResult<S> res;
    S acc = S(0);
    for (auto i : idx) {
        if (acc + norms[i] > budget) break;
        acc += norms[i];
        keep[i] = 0;
        ++res.dropped;
    }
    res.dropped_norm_bound = acc;
    res.expansion = GaussianExpansion<S>(e.n_electrons(), e.degree_cap());
    for (std::size_t i = 0; i < e.size(); ++i)
        if (keep[i]) res.expansion.push_back(e[i]);
    return res;
}

template <class S>
GaussianExpansion<S> prune(const GaussianExpansion<S>& e, S budget)
{
    return prune_report(e, budget).expansion;
}

using Term = GaussHermiteTerm<double>;
using Factor = GaussFactor<double>;
using Expansion = GaussianExpansion<double>;
using Prec = Precision<double>;
using Vec = VecX<double>;
using Mat = MatX<double>;

extern template class Precision<double>;
extern template class Cholesky<double>;
extern template class GaussianExpansion<double>;

} // namespace gausskern

#endif
