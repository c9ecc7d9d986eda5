#ifndef GAUSSKERN_POLY_HPP
#define GAUSSKERN_POLY_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace gausskern {

using MultiIndex = std::vector<std::uint8_t>;

inline int total_degree(const MultiIndex& a)
{
    int d = 0;
    for (auto v : a) d += v;
    return d;
}

// Polynomial in d variables, sparse monomial storage.
template <class C>
class Poly {
public:
    using Map = std::map<MultiIndex, C>;

    Poly() = default;
    explicit Poly(int dim) : dim_(dim) {}

    static Poly constant(int dim, C c)
    {
        Poly p(dim);
        if (c != C(0)) p.terms_[MultiIndex(dim, 0)] = c;
        return p;
    }

    static Poly monomial(const MultiIndex& a, C c)
    {
        Poly p(static_cast<int>(a.size()));
        if (c != C(0)) p.terms_[a] = c;
        return p;
    }

    int dim() const { return dim_; }
    const Map& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    int degree() const
    {
        int d = 0;
        for (auto& [a, c] : terms_) d = std::max(d, total_degree(a));
        return d;
    }

    bool is_constant() const
    {
        return terms_.empty() || (terms_.size() == 1 && total_degree(terms_.begin()->first) == 0);
    }

    C constant_value() const
    {
        auto it = terms_.find(MultiIndex(dim_, 0));
        return it == terms_.end() ? C(0) : it->second;
    }

    void add(const MultiIndex& a, C c)
    {
        if (c == C(0)) return;
        auto [it, fresh] = terms_.emplace(a, c);
        if (!fresh) {
            it->second += c;
            if (it->second == C(0)) terms_.erase(it);
        }
    }

    Poly& operator+=(const Poly& o)
    {
        for (auto& [a, c] : o.terms_) add(a, c);
        return *this;
    }

    Poly& operator*=(C s)
    {
        if (s == C(0)) {
            terms_.clear();
            return *this;
        }
        for (auto& [a, c] : terms_) c *= s;
        return *this;
    }

    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator*(Poly a, C s) { return a *= s; }

    friend Poly operator*(const Poly& p, const Poly& q)
    {
        Poly r(p.dim_);
        MultiIndex m(p.dim_);
        for (auto& [a, c] : p.terms_)
            for (auto& [b, d] : q.terms_) {
                for (int i = 0; i < p.dim_; ++i) m[i] = a[i] + b[i];
                r.add(m, c * d);
            }
        return r;
    }

    Poly derivative(int j) const
    {
        Poly r(dim_);
        for (auto& [a, c] : terms_) {
            if (a[j] == 0) continue;
            MultiIndex b = a;
            --b[j];
            r.add(b, c * C(a[j]));
        }
        return r;
    }

    // (sum_m L(j,m) y_m) * p
    template <class Derived>
    Poly times_linear(const Eigen::MatrixBase<Derived>& row) const
    {
        Poly r(dim_);
        for (auto& [a, c] : terms_)
            for (int m = 0; m < dim_; ++m) {
                if (row(m) == typename Derived::Scalar(0)) continue;
                MultiIndex b = a;
                ++b[m];
                r.add(b, c * C(row(m)));
            }
        return r;
    }

    template <class T>
    auto operator()(const T* y) const
    {
        using R = decltype(C(0) * y[0]);
        R s = R(0);
        for (auto& [a, c] : terms_) {
            R v = R(c);
            for (int i = 0; i < dim_; ++i)
                for (int e = 0; e < a[i]; ++e) v *= y[i];
            s += v;
        }
        return s;
    }

    // p(y + delta) as a polynomial in y.
    template <class V>
    Poly shifted(const V& delta) const
    {
        if (is_constant()) return *this;
        Poly r(dim_);
        for (auto& [a, c] : terms_) {
            // expand prod_i (y_i + d_i)^{a_i}
            std::vector<std::pair<MultiIndex, C>> acc{{MultiIndex(dim_, 0), c}};
            for (int i = 0; i < dim_; ++i) {
                if (a[i] == 0) continue;
                std::vector<std::pair<MultiIndex, C>> next;
                for (auto& [m, v] : acc) {
                    double binom = 1.0;
                    for (int b = 0; b <= a[i]; ++b) {
                        double dp = std::pow(static_cast<double>(delta(i)), a[i] - b);
                        MultiIndex mm = m;
                        mm[i] += b;
                        if (a[i] - b == 0 || delta(i) != 0) next.emplace_back(mm, v * C(binom * dp));
                        binom = binom * (a[i] - b) / (b + 1);
                    }
                }
                acc.swap(next);
            }
            for (auto& [m, v] : acc) r.add(m, v);
        }
        return r;
    }

    bool operator==(const Poly& o) const { return dim_ == o.dim_ && terms_ == o.terms_; }

private:
    int dim_ = 0;
    Map terms_;
};

// E[y^alpha] for y ~ N(0, S), S given densely.
template <class S>
class GaussMoments {
public:
    explicit GaussMoments(const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& cov) : cov_(cov) {}

    S operator()(const MultiIndex& a)
    {
        int deg = total_degree(a);
        if (deg == 0) return S(1);
        if (deg % 2) return S(0);
        auto it = memo_.find(a);
        if (it != memo_.end()) return it->second;
        int i = 0;
        while (a[i] == 0) ++i;
        MultiIndex b = a;
        --b[i];
        S s = S(0);
        for (int j = 0; j < static_cast<int>(b.size()); ++j) {
            if (b[j] == 0 || cov_(i, j) == S(0)) continue;
            MultiIndex c = b;
            --c[j];
            s += cov_(i, j) * S(b[j]) * (*this)(c);
        }
        memo_.emplace(a, s);
        return s;
    }

    template <class C>
    C expectation(const Poly<C>& p)
    {
        C s = C(0);
        for (auto& [a, c] : p.terms()) {
            if (total_degree(a) % 2) continue;
            s += c * (*this)(a);
        }
        return s;
    }

private:
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> cov_;
    std::map<MultiIndex, S> memo_;
};

} // namespace gausskern

#endif
