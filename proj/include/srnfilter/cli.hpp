#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace srnfilter {

/// Entry point of the `srnfilter` command line. Returns the process exit
/// code: 0 ok, 2 usage, 3 numerical failure, 4 degenerate filter. Errors are
/// reported on `err` as one JSON object.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace srnfilter
