#ifndef GAUSSKERN_COMMANDS_HPP
#define GAUSSKERN_COMMANDS_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include <gausskern/config.hpp>
#include <gausskern/eigensolver.hpp>
#include <gausskern/solver.hpp>

namespace gausskern {

enum ExitCode { exit_ok = 0, exit_failure = 1, exit_usage = 2 };

// Report serializers. Measured fields carry plain names, bounds end in "_bound".
std::string constants_json(const RunConfig& cfg);
std::string solve_report_json(const SolveReport& r, const RunConfig& cfg);
std::string history_json(const InvitResult& r, const RunConfig& cfg);
std::string convergence_csv(const IterationHistory& h);
std::string expsum_table_csv(double beta, double h, double r_min, double r_max, int grid);

// args excludes the program name
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

} // namespace gausskern

#endif
