#ifndef GAUSSKERN_ORACLE_HPP
#define GAUSSKERN_ORACLE_HPP

#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include <gausskern/gaussalg.hpp>

namespace gausskern {

struct GLRule {
    std::vector<double> x;
    std::vector<double> w;
};

// Gauss-Legendre on [-1, 1].
const GLRule& gauss_legendre(int n);

enum class QuadRule { midpoint, gauss_legendre };

// Tensor grid on center + frame * [-L, L]^3.
struct QuadratureGrid {
    double L = 8.0;
    int n = 64;
    QuadRule rule = QuadRule::gauss_legendre;
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Matrix3d frame = Eigen::Matrix3d::Identity();
    bool self_check = true;

    void validate() const;
};

struct QuadResult {
    double value = 0;
    double coarse = 0;
    double error_estimate = 0;
};

using Integrand3 = std::function<double(const Eigen::Vector3d&)>;

double quad3d_fixed(const Integrand3& f, const QuadratureGrid& g);
// Runs n and 2n and reports the difference; value is the 2n result.
QuadResult quad3d(const Integrand3& f, const QuadratureGrid& g);

// Grid whose frame whitens exp(-(x-c)A(x-c)/2).
QuadratureGrid adapted_grid(const Eigen::Vector3d& c, const Eigen::Matrix3d& A, double L = 9.0, int n = 48);

// complex-step derivative d/dx_j of a term
double term_partial(const Term& t, const Eigen::Vector3d& x, int j);

// ---------------------------------------------------------------------------
// random expansions at N = 1

struct RandomSpec {
    int min_terms = 1;
    int max_terms = 3;
    int max_degree = 2;
    double center_box = 2.0;
    double precision_shift = 0.1;
};

Term random_term(std::mt19937_64& rng, const RandomSpec& spec, int degree);
Expansion random_expansion(std::mt19937_64& rng, const RandomSpec& spec = {});
Expansion random_gaussian(std::mt19937_64& rng, const RandomSpec& spec = {});

// ---------------------------------------------------------------------------
// singular weights

// int |x|^{-p} v(x)^2 dx, 0 < p < 3, v on R^3.
struct WeightedResult {
    double value = 0;
    double error_estimate = 0;
};
WeightedResult inverse_power_integral(const Expansion& v, double p);
// Same for a single isotropic degree-0 term centered at the origin, by radial quadrature.
double inverse_power_integral_radial(const Term& t, double p);
bool is_radial(const Expansion& v);

// int f(x) dx in spherical coordinates about the origin; log-spaced radial panels
// below r_split, uniform panels above.
struct SphericalGrid {
    double r_min = 1e-12;
    double r_split = 0.5;
    double r_max = 20.0;
    int log_panels = 60;
    int lin_panels = 80;
    int nodes_per_panel = 10;
    int angular = 32;
};
double spherical_quad(const Integrand3& f, const SphericalGrid& g);

// ---------------------------------------------------------------------------
// Fourier-domain quadrature at N = 1

struct FourierGridOptions {
    int angular = 0;  // GL nodes in cos(theta); 0 = automatic
    int panels = 0;   // radial panels; 0 = automatic
    int nodes_per_panel = 12;
    double scale = 1.0;  // multiplies automatic sizes
};

// Nodes of a spherical product rule in a whitened frame of frequency space, each
// carrying |w| and quadrature weight times |v^(w)|^2.
class FourierProfile {
public:
    explicit FourierProfile(const Expansion& v, const FourierGridOptions& opt = {});

    // int F(|w|) |v^(w)|^2 dw
    double integrate(const std::function<double(double)>& radial_weight) const;
    double seminorm_sq(double theta) const;
    double norm_sq(double theta) const;

    const std::vector<double>& modulus() const { return r_; }
    const std::vector<double>& mass() const { return m_; }
    std::size_t size() const { return r_.size(); }

private:
    std::vector<double> r_;
    std::vector<double> m_;
};

// |v|_theta^2 from |w|^{2s} = s/Gamma(1-s) int_0^inf (1 - e^{-t|w|^2}) t^{-1-s} dt, 0 < s < 1,
// with the inner Fourier integrals in closed form; theta in (1,2) carries one factor |w|^2.
struct SeminormResult {
    double value = 0;
    double error_estimate = 0;
};
SeminormResult fractional_seminorm_sq(const Expansion& v, double theta);
double fractional_seminorm(const Expansion& v, double theta);
// ||v||_theta^2 = int (1+|w|^2)^theta |v^|^2, same route with (1+|w|^2)^s subordinated
SeminormResult fractional_norm_sq(const Expansion& v, double theta);
double fractional_norm(const Expansion& v, double theta);

// ---------------------------------------------------------------------------
// inequality checks

struct InequalityResult {
    double lhs = 0;
    double rhs = 0;
    bool holds = false;
    double ratio() const { return rhs > 0 ? lhs / rhs : 0; }
};

InequalityResult hardy_check(const Expansion& v);
InequalityResult hardy_rellich_check(const Expansion& v, double vartheta);

struct SincComponentTrial {
    int k = 0;
    double lhs = 0;
    double rhs = 0;
    bool holds = false;
};

struct SincComponentReport {
    std::vector<SincComponentTrial> trials;
    int violations = 0;
    double max_ratio = 0;
};

// phi_k u for the origin-centered phi_k of the 1/r sum; norms ||phi_k u||_0 analytic.
SincComponentReport sinc_component_check(int k, double vartheta, double h, int trials, std::uint64_t seed);
SincComponentReport sinc_component_check(const std::vector<int>& ks, double vartheta, double h, const std::vector<Expansion>& us);

struct KFunctionalReport {
    double lhs = 0;
    double rhs = 0;
    double constant = 0;
    double rel_error = 0;
    double extension_change = 0;
    bool holds = false;
};

// K(t,u)^2 = int t^2 w^D/(1 + t^2 w^D) w^{theta1} |u^|^2, w = 1 + |xi|^2, D = theta2 - theta1
double k_functional_sq(const FourierProfile& prof, double t, double theta1, double theta2);

// log t grid for the outer integral; tails beyond it are added from the limiting forms
struct TGrid {
    double log_t_min = -40;
    double log_t_max = 40;
    double panel = 2.0;
    int nodes = 10;
    // inner window for the extension study
    double inner = 30;
};

KFunctionalReport k_functional_check(const Expansion& u, const TGrid& grid, double theta1, double theta2, double s,
                                     double tol = 1e-4, const FourierGridOptions& fopt = {});

} // namespace gausskern

#endif
