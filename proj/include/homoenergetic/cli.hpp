#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace homoenergetic {

/*!
 * Command line front end: `abar`, `simulate`, `asymptotics`, `validate`.
 *
 * Exit codes: 0 success, 2 configuration error, 3 numerical failure,
 * 4 validation failure. Results go to `out`, diagnostics to `err`.
 * The default worker count comes from HOMOEN_THREADS; --threads overrides it.
 */
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace homoenergetic
