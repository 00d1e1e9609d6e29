#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace eaf::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitIo = 3;

// Entry point for `eafprot <simulate|train|replay|report> ...`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace eaf::cli
