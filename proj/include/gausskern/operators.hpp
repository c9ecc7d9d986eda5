#ifndef GAUSSKERN_OPERATORS_HPP
#define GAUSSKERN_OPERATORS_HPP

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include <gausskern/expsum.hpp>
#include <gausskern/gaussalg.hpp>

namespace gausskern {

struct Nucleus {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    double charge = 1.0;
};

struct MolecularSystem {
    int n_electrons = 1;
    std::vector<Nucleus> nuclei;

    double total_charge() const;
    int n_nuclei() const { return static_cast<int>(nuclei.size()); }
    Eigen::Vector3d charge_centroid() const;
    void validate() const;
};

MolecularSystem hydrogen_like(double Z, int n_electrons = 1);

struct OperatorConfig {
    double lambda = -1.0;
    double gamma = 1e-2;
    double h = 0.5;
    double vartheta = 0.25;
    // empty range (lo > hi) selects the default from the interval below
    int k_lo = 0;
    int k_hi = -1;
    double r_min = 1e-4;
    double r_max = 1e4;
    double tail_tol = 1e-10;

    void validate() const;
    bool has_k_range() const { return k_lo <= k_hi; }
    KRange k_range() const;
};

// Union of the truncation ranges of the 1/r Gaussian sum on [r_min, r_max]
// and the resolvent sum on |w|^2 - lambda in [r_min, r_max].
KRange default_k_range(const OperatorConfig& cfg);

struct ContractionEstimate {
    double theta = 0;
    double kappa = 0;
    double kappa_star = 0;
    double alpha = 0;
    double q = 0;
    double operator_bound = 0;
    int M = 0;
    bool contractive = false;
};

double theta_const(int N, double Z);
double kappa_theta(double vartheta);
double kappa_star(double lambda, double vartheta);
int interaction_count(const MolecularSystem& sys);
int M_const(const MolecularSystem& sys);
double alpha_const(const OperatorConfig& cfg, const MolecularSystem& sys);
ContractionEstimate contraction_constants(const OperatorConfig& cfg, const MolecularSystem& sys);

// sum_{n >= 0} l(n) q^n
double level_series(double q);

// phi_k(x) = (h / sqrt(pi)) e^{kh/2} exp(-e^{kh} |x|^2)
double phi_weight(int k, double h);
double phi_precision(int k, double h);
std::vector<Factor> interaction_factors(const MolecularSystem& sys, int k, double h);

Expansion apply_Vk(const Expansion& e, int k, const MolecularSystem& sys, const OperatorConfig& cfg);
double gk_prefactor(int k, const OperatorConfig& cfg);
Expansion apply_Gk(const Expansion& e, int k, const OperatorConfig& cfg);
Expansion apply_Q(const Expansion& e, const OperatorConfig& cfg);
Expansion apply_P(const Expansion& e, const OperatorConfig& cfg);

// G_l P V_k; each V term yields the pair (G_l v, -G_l Q v)
Expansion apply_Tkl(const Expansion& e, int k, int l, const MolecularSystem& sys, const OperatorConfig& cfg);

int ell_count(int n);
// pairs (k, l) with |k| + |l| = n in lexicographic order
std::vector<std::pair<int, int>> level_pairs(int n);

struct TTildeOptions {
    bool override_contractive = false;
    std::optional<KRange> k_range;
    // caps[n] = number of leading input terms fed to level n; levels beyond caps.size() are empty
    std::optional<std::vector<int>> level_caps;
};

Expansion apply_T_tilde(const Expansion& e, const OperatorConfig& cfg, const MolecularSystem& sys,
                        const TTildeOptions& opt = {});

struct GammaSelection {
    double gamma = 0;
    double alpha = 0;
    double alpha_bound = 0;
    double ratio = 0;  // alpha / alpha_bound
    double q1 = 0;
    int M = 0;
    double r = 0;
    double theta_sqrt_gamma = 0;  // weaker condition sqrt(gamma) theta < 1
    bool weak_condition = false;
};

double alpha_admissible_bound(const OperatorConfig& cfg, const MolecularSystem& sys, double r);
GammaSelection select_gamma(const OperatorConfig& cfg, const MolecularSystem& sys, double r);

} // namespace gausskern

#endif
