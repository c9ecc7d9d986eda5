#ifndef GAUSSKERN_SOLVER_HPP
#define GAUSSKERN_SOLVER_HPP

#include <optional>
#include <string>
#include <vector>

#include <gausskern/operators.hpp>

namespace gausskern {

// Terms in the order in which they enter; term j is needed iff eps < threshold[j].
// The prefix with threshold > eps approximates the target within eps in H^1, and
// count(eps) <= prefactor (kappa / eps)^{1/r} for eps >= eps_min.
struct ApproximationSchedule {
    Expansion terms;
    std::vector<double> thresholds;  // nonincreasing
    double kappa = 0;
    double r = 1;
    double prefactor = 1;
    double eps_min = 0;
    int generation = 0;

    int count(double eps) const;
    double count_bound(double eps) const;
    Expansion prefix(double eps) const;
    std::size_t size() const { return terms.size(); }
};

ApproximationSchedule build_schedule(const Expansion& f, double r, const std::vector<double>& eps_grid);
// log grid of 25 points over [eps_target / 10, sum of term norms]
ApproximationSchedule build_schedule(const Expansion& f, double r, double eps_target);

struct TruncationSchedule {
    double q1 = 0;
    double q2 = 0;
    double delta = 0;
    double epsilon = 0;
    std::vector<int> n;  // n[level], trailing zeros removed
    KRange k_range;
    int M = 0;
    double r = 1;

    // sum_level l(level) n[level]
    long long weighted_count() const;
};

double schedule_delta(int M, double q1, double r);

TruncationSchedule build_truncation(const ApproximationSchedule& s, const OperatorConfig& cfg,
                                    const MolecularSystem& sys, double epsilon,
                                    std::optional<double> delta_override = {});

struct ScheduledApplication {
    Expansion expansion;
    ApproximationSchedule schedule;
    double error_bound = 0;  // against T~ applied to the schedule's target
};

ScheduledApplication apply_T_scheduled(const ApproximationSchedule& u, const TruncationSchedule& trunc,
                                       const OperatorConfig& cfg, const MolecularSystem& sys);

// Sums coefficients of terms with bitwise identical center, precision and polynomial.
Expansion combine_like_terms(const Expansion& e);

struct PerturbationCertificate {
    double eps_V = 0;
    double eps_G = 0;
    double eps = 0;
    double delta_op = 0;
    double operator_bound = 0;
    double solution_gap_bound = 0;
    double smoothing_gap = 0;
    double gap_figure = 0;
};

double gap_figure(double gamma, double h);
PerturbationCertificate perturbation_certificate(const OperatorConfig& cfg, const MolecularSystem& sys,
                                                 double u_semi1, double u_semi2);

struct ResidualReport {
    double norm = 0;        // H^1 norm of the measured part
    double slack_bound = 0;  // bound on the pruned reference units
    double budget = 0;
    long long units = 0;
    long long units_kept = 0;
    int measured_terms = 0;
    KRange k_range;
};

// ||u + T~ u - f||_1 with T~ over the widened range (widen < 0 doubles its length);
// units G_l P V_k u_j are pruned smallest-bound first within the budget, the rest is measured exactly.
ResidualReport reference_residual(const Expansion& u, const Expansion& f, const OperatorConfig& cfg,
                                  const MolecularSystem& sys, double budget, int widen = -1,
                                  int max_terms = 6000);

struct LevelRecord {
    int nu = 0;
    double eps_nu = 0;
    int terms = 0;
    double count_bound = 0;
    double truncation_error_bound = 0;
};

struct SolveOptions {
    std::optional<double> delta_override;
    bool require_admissible = true;
    int max_levels = 200;
    double residual_budget_fraction = 0.1;
    bool measure_residual = true;
};

struct SolveReport {
    double epsilon = 0;
    double r = 1;
    double kappa = 0;
    double gamma = 0;
    double alpha = 0;
    double alpha_bound = 0;
    bool admissible = false;
    double operator_bound = 0;
    double delta = 0;
    double q1 = 0;
    double q2 = 0;
    int term_count = 0;
    double count_bound = 0;
    bool count_bound_holds = false;
    int levels_used = 0;
    double series_tail_bound = 0;
    std::vector<LevelRecord> levels;
    ResidualReport residual;
    PerturbationCertificate certificate;
    std::string note;
};

struct SolveResult {
    Expansion u;
    SolveReport report;
};

// total count guarantee 2 (2 kappa / eps)^{1/r}
double neumann_count_bound(double kappa, double epsilon, double r);

SolveResult neumann_solve(const Expansion& f, const OperatorConfig& cfg, const MolecularSystem& sys,
                          double epsilon, double r, const SolveOptions& opt = {});

} // namespace gausskern

#endif
