//------------------------------------------------------------------------------
//
//   Copyright 2026 The ProvHL Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include "provhl/error.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <string>
#include <vector>

namespace provhl {

/// Exit statuses of the `provhl` tool. Errors map to 10 + their Errc value.
namespace exitcode {
inline constexpr int kOk                 = 0;
inline constexpr int kFailure            = 1;  // unexpected exception
inline constexpr int kUsage              = 2;
inline constexpr int kInvalidTransaction = 3;  // committed with a non-valid flag
inline constexpr int kCancelled          = 4;  // the storage cancelled the request
inline constexpr int kErrorBase          = 10;
}  // namespace exitcode

constexpr int exitCodeFor(Errc code) noexcept
{
  return exitcode::kErrorBase + static_cast<int>(code);
}

/// "ok", "usage", "failure", "invalid", "cancelled" or an error name.
std::string outcomeName(int exitCode);

/// One line of a scenario script: `<expected outcome> <command arguments...>`.
/// Arguments split on whitespace; double quotes group; `{dir}` expands to
/// the script's directory.
struct ScenarioStep
{
  std::size_t              line{0};
  std::string              expect;
  std::vector<std::string> args;
};

std::vector<ScenarioStep> parseScenario(std::string_view text, std::filesystem::path const &dir);

/// Runs one command line (without the program name).
int runCommand(std::vector<std::string> const &args, std::ostream &out, std::ostream &err);

}  // namespace provhl
