#ifndef GAUSSKERN_VALIDATE_HPP
#define GAUSSKERN_VALIDATE_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace gausskern {

// One family of randomized or tabulated checks. measured is the worst value seen,
// compared against tolerance_bound; pass requires zero violations.
struct CheckResult {
    std::string name;
    int trials = 0;
    int violations = 0;
    double measured = 0;
    double tolerance_bound = 0;
    bool pass() const { return violations == 0 && trials > 0; }
};

struct SuiteReport {
    std::string suite;
    std::vector<CheckResult> checks;
    bool pass() const;
};

struct ValidationReport {
    std::uint64_t seed = 0;
    std::vector<SuiteReport> suites;
    bool pass() const;
};

const std::vector<std::string>& suite_names();

SuiteReport validate_expsum();
SuiteReport validate_algebra(std::uint64_t seed, int trials = 100);
SuiteReport validate_lemmas(std::uint64_t seed, int trials = 50);
SuiteReport validate_kfunctional(std::uint64_t seed, int count = 10);

// suite in suite_names() or "all"
ValidationReport run_validation(const std::string& suite, std::uint64_t seed);

// deterministic: no timings, fixed key order
std::string to_json(const ValidationReport& r);

} // namespace gausskern

#endif
