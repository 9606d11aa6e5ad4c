// Copyright 2026 The diffopt Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line frontend. Exit codes: 0 ok, 2 usage or config error,
// 3 numerical failure.

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace diffopt {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Chain-parallelism cap from DIFFOPT_THREADS (0 or unset means automatic).
int threads_from_env();

}  // namespace diffopt
