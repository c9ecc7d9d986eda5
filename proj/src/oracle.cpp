#include <gausskern/oracle.hpp>

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <stdexcept>

#include <gausskern/operators.hpp>

namespace gausskern {

const GLRule& gauss_legendre(int n)
{
    static std::mutex m;
    static std::map<int, GLRule> cache;
    std::lock_guard<std::mutex> g(m);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    GLRule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int it2 = 0; it2 < 100; ++it2) {
            double p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1;
            dp = n * (x * p1 - p0) / (x * x - 1);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1);
        r.x[i] = x;
        r.w[i] = 2 / ((1 - x * x) * dp * dp);
    }
    return cache.emplace(n, std::move(r)).first->second;
}

void QuadratureGrid::validate() const
{
    if (!(L > 0)) throw std::invalid_argument("quadrature half-width must be positive");
    if (n < 8) throw std::invalid_argument("quadrature needs at least 8 points per axis");
}

namespace {

void axis_rule(const QuadratureGrid& g, int n, std::vector<double>& x, std::vector<double>& w)
{
    x.resize(n);
    w.resize(n);
    if (g.rule == QuadRule::midpoint) {
        double h = 2 * g.L / n;
        for (int i = 0; i < n; ++i) {
            x[i] = -g.L + (i + 0.5) * h;
            w[i] = h;
        }
    } else {
        const auto& r = gauss_legendre(n);
        for (int i = 0; i < n; ++i) {
            x[i] = g.L * r.x[i];
            w[i] = g.L * r.w[i];
        }
    }
}

double quad_n(const Integrand3& f, const QuadratureGrid& g, int n)
{
    std::vector<double> x, w;
    axis_rule(g, n, x, w);
    double jac = std::abs(g.frame.determinant());
    std::vector<double> planes(n);
    parallel_for(n, [&](std::size_t i) {
        double s = 0;
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                Eigen::Vector3d p = g.center + g.frame * Eigen::Vector3d(x[i], x[j], x[k]);
                double v = f(p);
                if (!std::isfinite(v)) throw std::domain_error("non-finite integrand sample");
                s += w[j] * w[k] * v;
            }
        planes[i] = w[i] * s;
    });
    return jac * tree_sum(planes);
}

} // namespace

double quad3d_fixed(const Integrand3& f, const QuadratureGrid& g)
{
    g.validate();
    return quad_n(f, g, g.n);
}

QuadResult quad3d(const Integrand3& f, const QuadratureGrid& g)
{
    g.validate();
    QuadResult r;
    r.coarse = quad_n(f, g, g.n);
    if (!g.self_check) {
        r.value = r.coarse;
        return r;
    }
    r.value = quad_n(f, g, 2 * g.n);
    r.error_estimate = std::abs(r.value - r.coarse);
    return r;
}

QuadratureGrid adapted_grid(const Eigen::Vector3d& c, const Eigen::Matrix3d& A, double L, int n)
{
    Eigen::LLT<Eigen::Matrix3d> llt(A);
    if (llt.info() != Eigen::Success) throw FactorizationError("adapted grid needs a positive definite matrix");
    QuadratureGrid g;
    g.center = c;
    Eigen::Matrix3d Lm = llt.matrixL();
    g.frame = Lm.transpose().inverse();
    g.L = L;
    g.n = n;
    return g;
}

double term_partial(const Term& t, const Eigen::Vector3d& x, int j)
{
    using C = std::complex<double>;
    const double step = 1e-30;
    C xc[3] = {x(0), x(1), x(2)};
    xc[j] += C(0, step);
    return evaluate<double, C>(t, xc).imag() / step;
}

// ---------------------------------------------------------------------------

Term random_term(std::mt19937_64& rng, const RandomSpec& spec, int degree)
{
    std::uniform_real_distribution<double> box(-spec.center_box, spec.center_box);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec c(3);
    for (int i = 0; i < 3; ++i) c(i) = box(rng);
    Mat A(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) A(i, j) = normal(rng);
    Mat Q = A * A.transpose() + spec.precision_shift * Mat::Identity(3, 3);
    Term t = make_gaussian(unit(rng), c, Prec::dense(Q));
    if (degree > 0) {
        Poly<double> p(3);
        for (int a = 0; a <= degree; ++a)
            for (int b = 0; a + b <= degree; ++b)
                for (int d = 0; a + b + d <= degree; ++d)
                    p.add(MultiIndex{static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b),
                                     static_cast<std::uint8_t>(d)},
                          unit(rng));
        t.poly = p;
    }
    return t;
}

Expansion random_expansion(std::mt19937_64& rng, const RandomSpec& spec)
{
    std::uniform_int_distribution<int> nt(spec.min_terms, spec.max_terms);
    std::uniform_int_distribution<int> deg(0, spec.max_degree);
    Expansion e(1, std::max(4, spec.max_degree));
    int n = nt(rng);
    for (int i = 0; i < n; ++i) e.push_back(random_term(rng, spec, deg(rng)));
    return e;
}

Expansion random_gaussian(std::mt19937_64& rng, const RandomSpec& spec)
{
    Expansion e(1);
    e.push_back(random_term(rng, spec, 0));
    return e;
}

// ---------------------------------------------------------------------------

bool is_radial(const Expansion& v)
{
    if (v.size() != 1 || v.dim() != 3) return false;
    const Term& t = v[0];
    if (!t.is_gaussian() || t.center.norm() != 0) return false;
    Mat Q = t.precision.full();
    return (Q - Q(0, 0) * Mat::Identity(3, 3)).norm() == 0;
}

double inverse_power_integral_radial(const Term& t, double p)
{
    if (!(p > 0 && p < 3)) throw std::invalid_argument("power must lie in (0,3)");
    double c = t.scalar();
    double q = t.precision.full()(0, 0);
    // 4 pi c^2 int r^{2-p} e^{-q r^2} dr with r = e^s
    double a = 3 - p;
    double s_lo = -45 / a;
    double s_hi = 0.5 * std::log(60 / q);
    const auto& gl = gauss_legendre(16);
    int panels = static_cast<int>(std::ceil((s_hi - s_lo) / 0.5));
    double width = (s_hi - s_lo) / panels;
    double sum = 0;
    for (int i = 0; i < panels; ++i) {
        double mid = s_lo + (i + 0.5) * width;
        for (std::size_t j = 0; j < gl.x.size(); ++j) {
            double s = mid + 0.5 * width * gl.x[j];
            double r2 = std::exp(2 * s);
            sum += 0.5 * width * gl.w[j] * std::exp(a * s - q * r2);
        }
    }
    return 4 * M_PI * c * c * sum;
}

namespace {

// int exp(-t|x|^2) v(x)^2 dx
struct OriginMoments {
    std::vector<Term> products;

    explicit OriginMoments(const Expansion& v)
    {
        for (std::size_t i = 0; i < v.size(); ++i)
            for (std::size_t j = i; j < v.size(); ++j) {
                Term p = product(v[i], v[j]);
                if (i != j) p.coeff *= 2;
                products.push_back(std::move(p));
            }
    }

    double operator()(double t) const
    {
        Factor f;
        f.coeff = 1;
        f.center = Vec::Zero(3);
        f.precision = Prec::identity(1, 2 * t);
        double s = 0;
        for (auto& p : products) s += integrate(product(p, f));
        return s;
    }
};

double subordinated(const OriginMoments& I, double p, int nodes)
{
    // |x|^{-p} = Gamma(p/2)^{-1} int t^{p/2-1} e^{-t|x|^2} dt, t = e^u
    const double u0 = -30, u1 = 30, width = 1.0;
    const auto& gl = gauss_legendre(nodes);
    double b = p / 2;
    int panels = static_cast<int>((u1 - u0) / width);
    std::vector<double> part(panels);
    parallel_for(panels, [&](std::size_t i) {
        double mid = u0 + (i + 0.5) * width;
        double s = 0;
        for (int j = 0; j < nodes; ++j) {
            double u = mid + 0.5 * width * gl.x[j];
            s += 0.5 * width * gl.w[j] * std::exp(b * u) * I(std::exp(u));
        }
        part[i] = s;
    });
    double sum = tree_sum(part);
    double T0 = std::exp(u0), T1 = std::exp(u1);
    sum += I(T0) * std::pow(T0, b) / b;
    // I(t) ~ C t^{-3/2} for large t
    double C = I(T1) * std::pow(T1, 1.5);
    sum += C * std::pow(T1, b - 1.5) / (1.5 - b);
    return sum / std::tgamma(b);
}

} // namespace

WeightedResult inverse_power_integral(const Expansion& v, double p)
{
    if (!(p > 0 && p < 3)) throw std::invalid_argument("power must lie in (0,3)");
    if (v.dim() != 3) throw std::invalid_argument("weighted integrals are implemented for N = 1");
    WeightedResult r;
    if (v.empty()) return r;
    if (is_radial(v)) {
        r.value = inverse_power_integral_radial(v[0], p);
        return r;
    }
    OriginMoments I(v);
    r.value = subordinated(I, p, 10);
    r.error_estimate = std::abs(r.value - subordinated(I, p, 6));
    return r;
}

double spherical_quad(const Integrand3& f, const SphericalGrid& g)
{
    const auto& gl = gauss_legendre(g.nodes_per_panel);
    const auto& ga = gauss_legendre(g.angular);
    int nphi = 2 * g.angular;
    std::vector<double> rr, rw;
    double l0 = std::log(g.r_min), l1 = std::log(g.r_split);
    double lw = (l1 - l0) / g.log_panels;
    for (int i = 0; i < g.log_panels; ++i)
        for (std::size_t j = 0; j < gl.x.size(); ++j) {
            double s = l0 + (i + 0.5) * lw + 0.5 * lw * gl.x[j];
            double r = std::exp(s);
            rr.push_back(r);
            rw.push_back(0.5 * lw * gl.w[j] * r * r * r);
        }
    double w = (g.r_max - g.r_split) / g.lin_panels;
    for (int i = 0; i < g.lin_panels; ++i)
        for (std::size_t j = 0; j < gl.x.size(); ++j) {
            double r = g.r_split + (i + 0.5) * w + 0.5 * w * gl.x[j];
            rr.push_back(r);
            rw.push_back(0.5 * w * gl.w[j] * r * r);
        }
    std::vector<double> part(rr.size());
    parallel_for(rr.size(), [&](std::size_t i) {
        double s = 0;
        for (int a = 0; a < g.angular; ++a) {
            double ct = ga.x[a], st = std::sqrt(1 - ct * ct);
            for (int b = 0; b < nphi; ++b) {
                double ph = 2 * M_PI * b / nphi;
                Eigen::Vector3d x(rr[i] * st * std::cos(ph), rr[i] * st * std::sin(ph), rr[i] * ct);
                s += ga.w[a] * f(x);
            }
        }
        part[i] = rw[i] * s * 2 * M_PI / nphi;
    });
    return tree_sum(part);
}

// ---------------------------------------------------------------------------

namespace {

struct FastFourier {
    double scale;
    Eigen::Matrix3d B;
    Eigen::Vector3d a;
    std::vector<std::array<int, 3>> mono;
    std::vector<std::complex<double>> coef;

    explicit FastFourier(const Term& t)
    {
        FourierTerm<double> f = fourier(t);
        scale = f.scale;
        B = f.precision.full();
        a = f.phase;
        for (auto& [m, c] : f.poly.terms()) {
            mono.push_back({m[0], m[1], m[2]});
            coef.push_back(c);
        }
    }

    std::complex<double> operator()(const Eigen::Vector3d& w) const
    {
        double q = w.dot(B * w);
        std::complex<double> p = 0;
        for (std::size_t i = 0; i < mono.size(); ++i) {
            double v = 1;
            for (int d = 0; d < 3; ++d)
                for (int e = 0; e < mono[i][d]; ++e) v *= w(d);
            p += coef[i] * v;
        }
        return scale * p * std::exp(std::complex<double>(-0.5 * q, -a.dot(w)));
    }
};

} // namespace

FourierProfile::FourierProfile(const Expansion& v, const FourierGridOptions& opt)
{
    if (v.dim() != 3) throw std::invalid_argument("Fourier quadrature is implemented for N = 1");
    if (v.empty()) return;
    std::vector<FastFourier> fts;
    Eigen::Matrix3d Bref = Eigen::Matrix3d::Zero();
    for (auto& t : v.terms()) {
        fts.emplace_back(t);
        Bref += 2 * fts.back().B;
    }
    Bref /= static_cast<double>(fts.size());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(Bref);
    Eigen::Matrix3d W = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
    double jac = std::abs(W.determinant());
    // |w| is anisotropic in the whitened frame
    double cond = es.eigenvalues()(2) / es.eigenvalues()(0);

    double rho_max = 0, rho_small = 1e300, aniso = 0, dphase = 0;
    for (std::size_t i = 0; i < fts.size(); ++i) {
        Eigen::Matrix3d P = W.transpose() * (2 * fts[i].B) * W;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> ep(P);
        double lmin = ep.eigenvalues()(0), lmax = ep.eigenvalues()(2);
        int deg = v[i].degree();
        rho_max = std::max(rho_max, std::sqrt((90.0 + 8.0 * deg) / lmin) + 2.0 * deg);
        rho_small = std::min(rho_small, 0.05 / std::sqrt(lmax));
        aniso = std::max(aniso, (lmax - lmin) / 2);
        for (std::size_t j = 0; j < i; ++j)
            dphase = std::max(dphase, (W.transpose() * (fts[i].a - fts[j].a)).norm());
    }

    double sc = opt.scale;
    const auto& gl = gauss_legendre(opt.nodes_per_panel);
    std::vector<double> rr, rw;
    double l1 = std::log(rho_small), l0 = l1 - 25;
    int lp = static_cast<int>(std::ceil(25 * sc));
    for (int i = 0; i < lp; ++i)
        for (std::size_t j = 0; j < gl.x.size(); ++j) {
            double lw = (l1 - l0) / lp;
            double s = l0 + (i + 0.5) * lw + 0.5 * lw * gl.x[j];
            double r = std::exp(s);
            rr.push_back(r);
            rw.push_back(0.5 * lw * gl.w[j] * r * r * r);
        }
    double width = std::min(0.75, 2 * M_PI / (dphase + 1e-12));
    int panels = opt.panels > 0 ? opt.panels : static_cast<int>(std::ceil((rho_max - rho_small) / width * sc));
    double pw = (rho_max - rho_small) / panels;
    for (int i = 0; i < panels; ++i)
        for (std::size_t j = 0; j < gl.x.size(); ++j) {
            double r = rho_small + (i + 0.5) * pw + 0.5 * pw * gl.x[j];
            rr.push_back(r);
            rw.push_back(0.5 * pw * gl.w[j] * r * r);
        }

    std::vector<std::vector<double>> mods(rr.size()), masses(rr.size());
    parallel_for(rr.size(), [&](std::size_t i) {
        double rho = rr[i];
        int na = opt.angular > 0 ? opt.angular
                                 : static_cast<int>(std::ceil(
                                       sc * (10 + 1.2 * rho * dphase + 3 * std::sqrt(rho * rho * aniso) + 6 * std::sqrt(cond))));
        na = std::clamp(na, 8, 400);
        const auto& ga = gauss_legendre(na);
        int nphi = 2 * na;
        auto& mo = mods[i];
        auto& ma = masses[i];
        mo.reserve(na * nphi);
        ma.reserve(na * nphi);
        for (int a = 0; a < na; ++a) {
            double ct = ga.x[a], st = std::sqrt(1 - ct * ct);
            for (int b = 0; b < nphi; ++b) {
                double ph = 2 * M_PI * b / nphi;
                Eigen::Vector3d y(rho * st * std::cos(ph), rho * st * std::sin(ph), rho * ct);
                Eigen::Vector3d w = W * y;
                std::complex<double> val = 0;
                for (auto& f : fts) val += f(w);
                mo.push_back(w.norm());
                ma.push_back(rw[i] * ga.w[a] * (2 * M_PI / nphi) * jac * std::norm(val));
            }
        }
    });
    for (std::size_t i = 0; i < rr.size(); ++i) {
        r_.insert(r_.end(), mods[i].begin(), mods[i].end());
        m_.insert(m_.end(), masses[i].begin(), masses[i].end());
    }
}

double FourierProfile::integrate(const std::function<double(double)>& F) const
{
    double s = 0;
    for (std::size_t i = 0; i < r_.size(); ++i) s += F(r_[i]) * m_[i];
    return s;
}

double FourierProfile::seminorm_sq(double theta) const
{
    double s = 0;
    for (std::size_t i = 0; i < r_.size(); ++i) s += std::pow(r_[i], 2 * theta) * m_[i];
    return s;
}

double FourierProfile::norm_sq(double theta) const
{
    double s = 0;
    for (std::size_t i = 0; i < r_.size(); ++i) s += std::pow(1 + r_[i] * r_[i], theta) * m_[i];
    return s;
}

namespace {

// Closed-form int |w|^{2m} e^{-t|w|^2} |v^(w)|^2 dw, evaluated on the Fourier side pair by pair.
class DampedMoments {
public:
    static constexpr int kMaxWeight = 2;

    explicit DampedMoments(const Expansion& v)
    {
        for (auto& t : v.terms()) fts_.emplace_back(t);
        for (std::size_t i = 0; i < fts_.size(); ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                Pair p;
                p.i = i;
                p.j = j;
                for (int m = 0; m <= kMaxWeight; ++m) p.poly[m] = weighted_poly(fts_[i], fts_[j], m, p.deg[m]);
                pairs_.push_back(std::move(p));
            }
    }

    double operator()(double t, int m) const
    {
        if (m < 0 || m > kMaxWeight) throw std::invalid_argument("weight order out of range");
        double s = 0;
        for (auto& p : pairs_) {
            double r = pair_value(p, t, m).real();
            s += p.i == p.j ? r : 2 * r;
        }
        return s;
    }

private:
    static constexpr int D = 13;
    using C = std::complex<double>;
    struct Mono {
        int idx;
        C coef;
    };
    struct Pair {
        std::size_t i = 0, j = 0;
        std::vector<Mono> poly[kMaxWeight + 1];
        int deg[kMaxWeight + 1] = {};
    };

    static int at(int a, int b, int c) { return (a * D + b) * D + c; }

    // p_f conj(p_g) |w|^{2m}
    static std::vector<Mono> weighted_poly(const FastFourier& f, const FastFourier& g, int m, int& deg)
    {
        std::vector<C> P(D * D * D, C(0));
        deg = 0;
        for (std::size_t x = 0; x < f.mono.size(); ++x)
            for (std::size_t y = 0; y < g.mono.size(); ++y) {
                int a = f.mono[x][0] + g.mono[y][0], b = f.mono[x][1] + g.mono[y][1], c = f.mono[x][2] + g.mono[y][2];
                if (a + b + c + 2 * m >= D) throw std::invalid_argument("polynomial degree too large for the moment table");
                P[at(a, b, c)] += f.coef[x] * std::conj(g.coef[y]);
                deg = std::max(deg, a + b + c);
            }
        for (int k = 0; k < m; ++k) {
            std::vector<C> R(D * D * D, C(0));
            for (int a = 0; a <= deg; ++a)
                for (int b = 0; a + b <= deg; ++b)
                    for (int c = 0; a + b + c <= deg; ++c) {
                        C v = P[at(a, b, c)];
                        if (v == C(0)) continue;
                        R[at(a + 2, b, c)] += v;
                        R[at(a, b + 2, c)] += v;
                        R[at(a, b, c + 2)] += v;
                    }
            P.swap(R);
            deg += 2;
        }
        std::vector<Mono> out;
        for (int i = 0; i < D * D * D; ++i)
            if (P[i] != C(0)) out.push_back({i, P[i]});
        return out;
    }

    C pair_value(const Pair& p, double t, int m) const
    {
        const FastFourier& f = fts_[p.i];
        const FastFourier& g = fts_[p.j];
        Eigen::Matrix3d A = f.B + g.B + 2 * t * Eigen::Matrix3d::Identity();
        Eigen::LLT<Eigen::Matrix3d> llt(A);
        Eigen::Matrix3d Cv = llt.solve(Eigen::Matrix3d::Identity());
        Eigen::Vector3d d = f.a - g.a;
        Eigen::Vector3d Cd = Cv * d;
        const auto& L = llt.matrixL();
        double logdet = 2 * std::log(L(0, 0) * L(1, 1) * L(2, 2));
        double base = f.scale * g.scale * std::exp(1.5 * std::log(2 * M_PI) - 0.5 * logdet - 0.5 * d.dot(Cd));
        if (base == 0) return 0;
        int deg = p.deg[m];
        C mu[3] = {C(0, -Cd(0)), C(0, -Cd(1)), C(0, -Cd(2))};
        // non-central moments E[(xi + mu)^alpha], xi ~ N(0, Cv)
        thread_local std::vector<C> M(D * D * D);
        M[at(0, 0, 0)] = 1;
        for (int n = 1; n <= deg; ++n)
            for (int a = 0; a <= n; ++a)
                for (int b = 0; a + b <= n; ++b) {
                    int be[3] = {a, b, n - a - b};
                    int i = a > 0 ? 0 : (b > 0 ? 1 : 2);
                    --be[i];
                    C v = mu[i] * M[at(be[0], be[1], be[2])];
                    for (int j = 0; j < 3; ++j) {
                        if (be[j] == 0) continue;
                        int ga[3] = {be[0], be[1], be[2]};
                        --ga[j];
                        v += Cv(i, j) * double(be[j]) * M[at(ga[0], ga[1], ga[2])];
                    }
                    M[at(a, b, n - a - b)] = v;
                }
        C s = 0;
        for (auto& mo : p.poly[m]) s += mo.coef * M[mo.idx];
        return base * s;
    }

    std::vector<FastFourier> fts_;
    std::vector<Pair> pairs_;
};

double subordinated_seminorm(const DampedMoments& J, int m, double s, int nodes)
{
    double J0 = J(0, m);
    double J1 = J(0, m + 1);
    if (J0 == 0) return 0;
    double scale = J1 / J0;
    double T0 = 1e-12 / scale, T1 = 1e13 / scale;
    double u0 = std::log(T0), u1 = std::log(T1);
    const auto& gl = gauss_legendre(nodes);
    const auto& gs = gauss_legendre(6);
    // J0 - J(t) = t int_0^1 J_{m+1}(t sigma) d sigma avoids cancellation for small t
    auto gap = [&](double t) {
        if (t * scale > 0.05) return J0 - J(t, m);
        double acc = 0;
        for (int k = 0; k < 6; ++k) acc += 0.5 * gs.w[k] * J(t * 0.5 * (1 + gs.x[k]), m + 1);
        return t * acc;
    };
    int panels = static_cast<int>(std::ceil(u1 - u0));
    double pw = (u1 - u0) / panels;
    std::vector<double> part(panels);
    for (int i = 0; i < panels; ++i) {
        double acc = 0;
        for (int j = 0; j < nodes; ++j) {
            double u = u0 + (i + 0.5) * pw + 0.5 * pw * gl.x[j];
            acc += 0.5 * pw * gl.w[j] * gap(std::exp(u)) * std::exp(-s * u);
        }
        part[i] = acc;
    }
    double sum = tree_sum(part);
    // J0 - J(t) ~ t J1 below T0; J(t) negligible above T1
    sum += J1 * std::pow(T0, 1 - s) / (1 - s);
    sum += J0 * std::pow(T1, -s) / s;
    return s / std::tgamma(1 - s) * sum;
}

// int (1+|w|^2)^{m+s} |v^|^2 with (1+x)^s = s/Gamma(1-s) int (1 - e^{-t(1+x)}) t^{-1-s} dt
double subordinated_norm(const DampedMoments& J, int m, double s, int nodes)
{
    auto K = [&](double t, int mm) {
        double acc = 0, binom = 1;
        for (int j = 0; j <= mm; ++j) {
            acc += binom * J(t, j);
            binom = binom * (mm - j) / (j + 1);
        }
        return acc;
    };
    // d/dt of -K(t, m) at argument t, i.e. sum_j C(m,j) J(t, j+1)
    auto Kd = [&](double t) {
        double acc = 0, binom = 1;
        for (int j = 0; j <= m; ++j) {
            acc += binom * J(t, j + 1);
            binom = binom * (m - j) / (j + 1);
        }
        return acc;
    };
    double K0 = K(0, m);
    double K1 = K(0, m + 1);
    if (K0 == 0) return 0;
    double scale = K1 / K0;
    double T0 = 1e-12 / scale, T1 = 1e13 / scale;
    double u0 = std::log(T0), u1 = std::log(T1);
    const auto& gl = gauss_legendre(nodes);
    const auto& gs = gauss_legendre(6);
    auto gap = [&](double t) {
        if (t * scale > 0.05) return K0 - std::exp(-t) * K(t, m);
        double acc = 0;
        for (int k = 0; k < 6; ++k) acc += 0.5 * gs.w[k] * Kd(t * 0.5 * (1 + gs.x[k]));
        return -std::expm1(-t) * K(t, m) + t * acc;
    };
    int panels = static_cast<int>(std::ceil(u1 - u0));
    double pw = (u1 - u0) / panels;
    std::vector<double> part(panels);
    for (int i = 0; i < panels; ++i) {
        double acc = 0;
        for (int j = 0; j < nodes; ++j) {
            double u = u0 + (i + 0.5) * pw + 0.5 * pw * gl.x[j];
            acc += 0.5 * pw * gl.w[j] * gap(std::exp(u)) * std::exp(-s * u);
        }
        part[i] = acc;
    }
    double sum = tree_sum(part);
    sum += K1 * std::pow(T0, 1 - s) / (1 - s);
    sum += K0 * std::pow(T1, -s) / s;
    return s / std::tgamma(1 - s) * sum;
}

} // namespace

SeminormResult fractional_norm_sq(const Expansion& v, double theta)
{
    if (!(theta >= 0 && theta <= 2)) throw std::invalid_argument("theta must lie in [0,2]");
    SeminormResult r;
    if (v.empty()) return r;
    DampedMoments J(v);
    if (theta == 0 || theta == 1 || theta == 2) {
        double acc = 0, binom = 1;
        int m = static_cast<int>(theta);
        for (int j = 0; j <= m; ++j) {
            acc += binom * J(0, j);
            binom = binom * (m - j) / (j + 1);
        }
        r.value = acc;
        return r;
    }
    int m = theta > 1 ? 1 : 0;
    double s = theta - m;
    r.value = subordinated_norm(J, m, s, 10);
    r.error_estimate = std::abs(r.value - subordinated_norm(J, m, s, 7));
    return r;
}

SeminormResult fractional_seminorm_sq(const Expansion& v, double theta)
{
    if (!(theta > 0 && theta <= 2)) throw std::invalid_argument("theta must lie in (0,2]");
    SeminormResult r;
    if (v.empty()) return r;
    DampedMoments J(v);
    if (theta == 1 || theta == 2) {
        r.value = J(0, static_cast<int>(theta));
        return r;
    }
    int m = theta > 1 ? 1 : 0;
    double s = theta - m;
    r.value = subordinated_seminorm(J, m, s, 10);
    r.error_estimate = std::abs(r.value - subordinated_seminorm(J, m, s, 7));
    return r;
}

double fractional_seminorm(const Expansion& v, double theta)
{
    return std::sqrt(fractional_seminorm_sq(v, theta).value);
}

double fractional_norm(const Expansion& v, double theta)
{
    return std::sqrt(fractional_norm_sq(v, theta).value);
}

// ---------------------------------------------------------------------------

InequalityResult hardy_check(const Expansion& v)
{
    if (v.dim() != 3) throw std::invalid_argument("Hardy check is implemented for N = 1");
    InequalityResult r;
    r.lhs = inverse_power_integral(v, 2.0).value;
    r.rhs = 4 * sobolev_semi_inner(v, v, 1);
    r.holds = r.lhs <= r.rhs * (1 + 1e-6);
    return r;
}

InequalityResult hardy_rellich_check(const Expansion& v, double t)
{
    if (!(t > 0 && t < 1.5)) throw std::invalid_argument("vartheta must lie in (0,3/2)");
    if (t == 1.0) return hardy_check(v);
    InequalityResult r;
    r.lhs = inverse_power_integral(v, 2 * t).value;
    double c = std::pow(4.0, t) / std::min(1.0, (3 - 2 * t) * (3 - 2 * t));
    r.rhs = c * fractional_seminorm_sq(v, t).value;
    r.holds = r.lhs <= r.rhs * (1 + 1e-6);
    return r;
}

SincComponentReport sinc_component_check(const std::vector<int>& ks, double t, double h, const std::vector<Expansion>& us)
{
    if (!(t > 0 && t < 0.5)) throw std::invalid_argument("vartheta must lie in (0,1/2)");
    SincComponentReport rep;
    double kap = kappa_theta(t);
    for (auto& u : us) {
        double up = fractional_seminorm(u, 1 + t);
        double um = fractional_seminorm(u, 1 - t);
        for (int k : ks) {
            Factor f;
            f.coeff = phi_weight(k, h);
            f.center = Vec::Zero(3);
            f.precision = Prec::identity(1, phi_precision(k, h));
            Expansion pu(1, u.degree_cap());
            for (auto& term : u.terms()) pu.push_back(product(term, f));
            SincComponentTrial tr;
            tr.k = k;
            tr.lhs = sobolev_norm(pu, 0);
            tr.rhs = kap * (t * h / 2) * std::exp(-t * h * std::abs(k) / 2) * (k >= 0 ? up : um);
            tr.holds = tr.lhs <= tr.rhs * (1 + 1e-9);
            if (!tr.holds) ++rep.violations;
            rep.max_ratio = std::max(rep.max_ratio, tr.lhs / tr.rhs);
            rep.trials.push_back(tr);
        }
    }
    return rep;
}

SincComponentReport sinc_component_check(int k, double t, double h, int trials, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<Expansion> us;
    RandomSpec spec;
    spec.max_terms = 2;
    for (int i = 0; i < trials; ++i) us.push_back(random_expansion(rng, spec));
    return sinc_component_check(std::vector<int>{k}, t, h, us);
}

double k_functional_sq(const FourierProfile& prof, double t, double th1, double th2)
{
    const auto& r = prof.modulus();
    const auto& m = prof.mass();
    double D = th2 - th1;
    double s = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        double w = 1 + r[i] * r[i];
        double x = t * t * std::pow(w, D);
        s += x / (1 + x) * std::pow(w, th1) * m[i];
    }
    return s;
}

KFunctionalReport k_functional_check(const Expansion& u, const TGrid& g, double th1, double th2, double s,
                                     double tol, const FourierGridOptions& fopt)
{
    if (!(th1 < th2)) throw std::invalid_argument("need theta1 < theta2");
    if (!(s > 0 && s < 1)) throw std::invalid_argument("need 0 < s < 1");
    FourierProfile prof(u, fopt);
    const auto& r = prof.modulus();
    const auto& m = prof.mass();
    double D = th2 - th1;
    std::vector<double> wD(r.size()), w1(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        double w = 1 + r[i] * r[i];
        wD[i] = std::pow(w, D);
        w1[i] = std::pow(w, th1) * m[i];
    }
    auto K2 = [&](double t) {
        double acc = 0;
        double t2 = t * t;
        for (std::size_t i = 0; i < wD.size(); ++i) {
            double x = t2 * wD[i];
            acc += x / (1 + x) * w1[i];
        }
        return acc;
    };
    double n1 = prof.norm_sq(th1), n2 = prof.norm_sq(th2);
    const auto& gl = gauss_legendre(g.nodes);
    auto outer = [&](double lo, double hi) {
        int panels = static_cast<int>(std::ceil((hi - lo) / g.panel));
        double pw = (hi - lo) / panels;
        std::vector<double> part(panels);
        parallel_for(panels, [&](std::size_t i) {
            double acc = 0;
            for (int j = 0; j < g.nodes; ++j) {
                double tau = lo + (i + 0.5) * pw + 0.5 * pw * gl.x[j];
                acc += 0.5 * pw * gl.w[j] * std::exp(-2 * s * tau) * K2(std::exp(tau));
            }
            part[i] = acc;
        });
        double v = tree_sum(part);
        // K^2 ~ t^2 ||u||_{theta2}^2 below, ||u||_{theta1}^2 above
        v += std::exp((2 - 2 * s) * lo) * n2 / (2 - 2 * s);
        v += std::exp(-2 * s * hi) * n1 / (2 * s);
        return v;
    };
    KFunctionalReport rep;
    rep.lhs = outer(g.log_t_min, g.log_t_max);
    double inner = outer(-g.inner, g.inner);
    rep.constant = M_PI / (2 * std::sin(M_PI * s));
    rep.rhs = rep.constant * prof.norm_sq(th1 + s * D);
    rep.rel_error = std::abs(rep.lhs - rep.rhs) / rep.rhs;
    rep.extension_change = std::abs(rep.lhs - inner) / rep.rhs;
    rep.holds = rep.rel_error <= tol && rep.extension_change <= tol;
    return rep;
}

} // namespace gausskern
