#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cmrl {

/// Exit codes: 0 ok, 1 unexpected failure, 2 configuration, 3 data, 4 numeric.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace cmrl
