#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bolt {

// Exit codes: 0 ok, 1 usage, 2 data, 3 backend/transport.
int cli_main(int argc, char** argv);

// `args` excludes the program name. Data goes to `out` unless --out is given.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bolt
