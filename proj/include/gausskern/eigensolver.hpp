#ifndef GAUSSKERN_EIGENSOLVER_HPP
#define GAUSSKERN_EIGENSOLVER_HPP

#include <optional>
#include <string>
#include <vector>

#include <gausskern/operators.hpp>

namespace gausskern {

enum class InvitVariant { potential, residual };
enum class PotentialKind { coulomb, harmonic };

std::string to_string(InvitVariant v);
InvitVariant parse_variant(const std::string& s);

struct InverseIterationConfig {
    double mu = 36.0;  // 0 selects the smallest admissible shift with a 1% margin on delta_tol
    InvitVariant variant = InvitVariant::potential;
    double delta_tol = 0.95;
    int max_iter = 30;
    double prune_fraction = 0.25;  // prune budget = delta_tol * prune_fraction * ||update||_1
    double h = 0.25;
    double r_min = 1e-5;
    double r_max = 1e4;
    double tail_tol = 1e-12;
    double tol = 1e-10;  // stop once |lambda change| < tol
    int n_work = 24;
    // dictionary of isotropic nucleus-centered Gaussians exp(-p |x - R|^2 / 2), p log-spaced
    double dict_lo = 2e-2;
    double dict_hi = 2e5;
    int dict_size = 48;
    double init_precision = 1.0;
    PotentialKind potential = PotentialKind::coulomb;
    // shifted reference eigenvalues enable the per-step rate check
    std::optional<double> lambda1;
    std::optional<double> lambda2;
    double rate_slack = 1e-2;

    void validate(const MolecularSystem& sys) const;
};

double eta_const(const MolecularSystem& sys, double mu);
double c_eta(double eta);
// sqrt(c(eta)) eta
double preconditioner_accuracy(const MolecularSystem& sys, double mu);
double admissible_mu(const MolecularSystem& sys, double target);
double effective_mu(const InverseIterationConfig& cfg, const MolecularSystem& sys);

// k-range of the Gaussian sum standing in for 1/r
KRange potential_k_range(const InverseIterationConfig& cfg);

// V~ u with the expsum potential, or |x|^2 u for the harmonic hook
Expansion apply_potential(const Expansion& u, const MolecularSystem& sys, const InverseIterationConfig& cfg);
double potential_inner(const Expansion& a, const Expansion& b, const MolecularSystem& sys,
                       const InverseIterationConfig& cfg);

struct RayleighValue {
    double shifted = 0;
    double unshifted = 0;
    double potential_slack_bound = 0;  // |lambda(V) - lambda(V~)| bound, coulomb only
};

RayleighValue rayleigh_value(const Expansion& u, const MolecularSystem& sys, const InverseIterationConfig& cfg);
double rayleigh(const Expansion& u, const MolecularSystem& sys, const InverseIterationConfig& cfg,
                bool shifted = true);

// -Lap u + mu u + V~ u - lambda u, lambda the shifted Rayleigh value
Expansion residual(const Expansion& u, const MolecularSystem& sys, double lambda_shifted,
                   const InverseIterationConfig& cfg);

// (-Lap + mu)^{-1} via sum_k h e^{kh} e^{-e^{kh} mu} exp(-e^{kh} |w|^2)
KRange resolvent_k_range(double mu, double h, double s_max, double tail_tol);
Expansion apply_resolvent(const Expansion& f, double mu, double h, double s_max = 1e8, double tail_tol = 1e-14);

double rate_bound(double lambda, double lambda1, double lambda2, double delta);

// Galerkin projection of the inverse-iteration step onto a greedily chosen working space
// from a fixed dictionary; b(g, (-Lap + mu)^{-1} f) = (g, f) keeps every entry closed form.
class InvitWorkspace {
public:
    InvitWorkspace(const MolecularSystem& sys, const Expansion& u0, const InverseIterationConfig& cfg);

    const Expansion& dictionary() const { return dict_; }
    const Mat& S() const { return S_; }
    const Mat& T() const { return T_; }
    const Mat& V() const { return V_; }
    double mu() const { return mu_; }

    Expansion expand(const Vec& c) const;
    double rayleigh_shifted(const Vec& c) const;

    struct Step {
        Vec c;
        double lambda_in = 0;  // shifted
        double update_norm = 0;
        double residual_norm = 0;  // dual b-norm of the residual on the dictionary span
        int terms = 0;
        int pruned = 0;
    };

    // c must be L2-normalized
    Step step(const Vec& c) const;

private:
    Vec rhs_potential(const Vec& c, double lam) const;
    Vec rhs_residual(const Vec& c, double lam) const;

    MolecularSystem sys_;
    InverseIterationConfig cfg_;
    double mu_;
    Expansion dict_;
    Mat S_, T_, V_, B_;
};

struct IterationRecord {
    int iter = 0;
    double rayleigh = 0;  // unshifted
    double rayleigh_shifted = 0;
    int term_count = 0;
    double residual_norm = 0;
    double update_norm = 0;
    double measured_ratio = 0;
    double rate_bound = 0;
    bool rate_ok = true;
};

struct IterationHistory {
    std::vector<IterationRecord> records;
    double mu = 0;
    double eta = 0;
    double preconditioner_accuracy = 0;
    double potential_slack_bound = 0;
    bool monotone = true;
    bool rate_checked = false;
    bool rate_ok = true;
    bool converged = false;
    std::string stop_reason;
};

struct InvitResult {
    double eigenvalue = 0;  // unshifted
    Expansion u;
    IterationHistory history;
};

struct InvitStepResult {
    Expansion u;
    IterationRecord record;
};

// one step from u using u's terms plus the dictionary
InvitStepResult invit_step(const Expansion& u, const MolecularSystem& sys, const InverseIterationConfig& cfg);

// single Gaussian per electron at the charge centroid
Expansion initial_guess(const MolecularSystem& sys, double precision);

InvitResult run_inverse_iteration(const MolecularSystem& sys, const Expansion& u0, const InverseIterationConfig& cfg);

} // namespace gausskern

#endif
