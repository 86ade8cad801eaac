#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rts::cli {

// Runs one `rts` invocation. `args` excludes the program name. The JSON
// summary (or error object) goes to `out`, logs and usage text to `err`.
// Returns 0 on success, 1 on runtime failure, 2 on usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rts::cli
