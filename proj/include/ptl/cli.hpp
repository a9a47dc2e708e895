// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace ptl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;

/// Command-line entry point. args[0] is the program name. Environment entries prefixed with PTL_
/// supply flag fallbacks (PTL_CONFIG, PTL_OUT, PTL_SEED, PTL_THREADS) and config key overrides
/// (PTL_<BLOCK>__<KEY>). Returns 0 on success, 1 on validation failure, 2 on numerical failure.
int run(const std::vector<std::string>& args, const std::map<std::string, std::string>& env, std::ostream& out,
        std::ostream& err);

}  // namespace ptl
