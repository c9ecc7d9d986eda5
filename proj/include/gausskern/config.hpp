#ifndef GAUSSKERN_CONFIG_HPP
#define GAUSSKERN_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <gausskern/eigensolver.hpp>
#include <gausskern/operators.hpp>

namespace gausskern {

// Messages read "<source>:<line>: <field path>: <reason>" when the line is known.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SolverSettings {
    double epsilon = 1e-2;
    double order = 1.0;
    double residual_budget_fraction = 0.1;
    std::optional<double> delta_override;
    bool require_admissible = true;
    int max_levels = 200;
    bool measure_residual = true;
    // right-hand side: an expansion dump (relative to the config file), else a unit-norm Gaussian at the charge centroid
    std::string rhs_path;
    double rhs_precision = 1.0;
};

struct RunConfig {
    MolecularSystem system;
    OperatorConfig op;
    bool gamma_given = false;  // otherwise gamma comes from select_gamma at solver.order
    SolverSettings solver;
    InverseIterationConfig eigen;
    std::string output_dir = "gausskern_out";
    std::uint64_t seed = 0;
};

// Defaults: operator fields as in OperatorConfig; eigen.mu absent selects the smallest
// admissible shift; eigen.init_precision 1 (unit width).
RunConfig parse_config(const std::string& path);
RunConfig parse_config_string(const std::string& text, const std::string& source = "<string>");

// Recomputes gamma from select_gamma unless it was given, then re-runs all checks.
void finalize_config(RunConfig& cfg);

} // namespace gausskern

#endif
