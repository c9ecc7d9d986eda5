#ifndef GAUSSKERN_LEMMAS_HPP
#define GAUSSKERN_LEMMAS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <gausskern/operators.hpp>
#include <gausskern/oracle.hpp>

namespace gausskern {

// Measured operator norms against their analytic bounds at N = 1.
// holds = lhs <= rhs (1 + rel_tol).

// |G_k f|_{2-s} <= h ((2-s)/(2e))^{(2-s)/2} exp(e^{kh} lambda + s kh / 2) ||f||_0, 0 < s < 2
double gk_seminorm_bound(int k, double s, const OperatorConfig& cfg);
InequalityResult gk_seminorm_check(const Expansion& f, int k, double s, const OperatorConfig& cfg,
                                   double rel_tol = 1e-9);

// ||P v||_{1+s} <= sqrt(2) gamma^{1/2-s} |v|_{2-s}, 0 < s < 1/2
InequalityResult cutoff_check(const Expansion& v, double s, double gamma, double rel_tol = 1e-6);

// ||G_l P V_k u||_1 <= alpha q^{|k|+|l|} ||u||_1
InequalityResult tkl_decay_check(const Expansion& u, int k, int l, const MolecularSystem& sys,
                                 const OperatorConfig& cfg, double rel_tol = 1e-9);

// ||G~ P f||_1 <= sqrt(gamma) ||f||_0, G~ the truncated sum of the G_l
InequalityResult gp_check(const Expansion& f, const OperatorConfig& cfg, double rel_tol = 1e-6);

// ||(sum_k V_k) u - V u||_0 <= theta eps(1/2, h) |u|_1 for isotropic origin-centered u, one nucleus at 0
InequalityResult potential_accuracy_check(const Term& u, double Z, const OperatorConfig& cfg);

struct SuiteResult {
    std::string name;
    int trials = 0;
    int violations = 0;
    double max_ratio = 0;
    double seconds = 0;
};

SuiteResult hardy_suite(int trials, std::uint64_t seed);
SuiteResult hardy_rellich_suite(double vartheta, int trials, std::uint64_t seed);
SuiteResult sinc_component_suite(double vartheta, double h, int trials, std::uint64_t seed);
SuiteResult gk_suite(int trials, std::uint64_t seed);
SuiteResult cutoff_suite(int trials, std::uint64_t seed);
SuiteResult tkl_suite(int trials, std::uint64_t seed);

} // namespace gausskern

#endif
