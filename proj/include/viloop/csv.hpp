// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fmt/format.h>

#include <string>

namespace viloop {

// Shortest representation that round-trips; exports stay byte-identical for
// identical inputs.
inline std::string num(double x) { return fmt::format("{}", x); }

}  // namespace viloop
