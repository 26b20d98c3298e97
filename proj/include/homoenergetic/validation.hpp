#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace homoenergetic {

struct CheckResult
{
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct ValidationOptions
{
    bool quick = false;  //!< small sizes, a few seconds in total
    int threads = 1;
    std::uint64_t seed = 20240611;
};

/*!
 * Invariant suite and oracle cross-checks across all modules. Each check is
 * reported on `log` as it finishes; exceptions inside a check count as failures.
 */
std::vector<CheckResult> run_validation(const ValidationOptions& options, std::ostream& log);

}  // namespace homoenergetic
