#pragma once

#include <string>
#include <vector>

namespace equivar {

inline constexpr const char* kVersion = "0.1.0";

// One property check. pass is exactly residual <= tolerance; negative
// controls report bound / measured so that the same rule applies.
struct CheckResult {
    std::string name;
    std::string module;
    std::string anchor;  // what the check certifies, in words
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    double seconds = 0.0;
    std::string error;  // set when the check threw
};

struct AuditConfig {
    int bandlimit = 8;
    unsigned seed = 0;
    // Comma-separated module names or check-name prefixes; empty runs all.
    std::string filter;
    // Adds cross-checks of the fast transforms against the serial direct sums.
    bool oracle = false;
};

struct AuditReport {
    std::string version = kVersion;
    AuditConfig config;
    std::string phase_convention;
    std::vector<CheckResult> checks;  // sorted by name

    int passed() const;
    int failed() const;
    std::string to_json() const;
    std::string to_csv() const;
};

std::vector<std::string> audit_modules();
// Names of every check the config selects, without running them.
std::vector<std::string> audit_check_names(const AuditConfig& config);
AuditReport run_audit(const AuditConfig& config);

}  // namespace equivar
