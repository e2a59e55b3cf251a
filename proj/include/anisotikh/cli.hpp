/**
 * @file cli.hpp
 * @brief Command-line driver, callable in-process for testing.
 */

#pragma once

#include <string>
#include <vector>

namespace anisotikh {

/// Run the command-line interface; args exclude the program name.
/// Exit codes: 0 success, 2 configuration error, 3 solver error, 4 I/O error.
int run_cli(const std::vector<std::string>& args);

}  // namespace anisotikh
