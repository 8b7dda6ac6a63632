#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace evdvsr::app {

/// Test hooks that deliberately break one contract.
struct FaultInjection {
    bool dcn_clamp = false;  // drop the DCN offset bound
};

/// Outcome of one property: passes when measured <= tolerance.
struct PropertyResult {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string error;  // set when the property threw
};

struct Property {
    std::string name;  // "<module>.<property>"
    std::function<PropertyResult(const FaultInjection&)> run;
};

const std::vector<Property>& registered_properties();

/// Runs every property; one line per property is written to `out`. Exceptions count as failures.
std::vector<PropertyResult> run_selfcheck(const FaultInjection& faults, std::ostream& out);

/// "PASS name measured=... tol=... margin=..."
std::string format_result(const PropertyResult& r);

}  // namespace evdvsr::app
