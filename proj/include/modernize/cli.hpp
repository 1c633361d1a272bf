#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace modernize {

/// Exit codes: 0 success, 1 conversion below acceptable or a failed file, 2 usage or input error.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace modernize
