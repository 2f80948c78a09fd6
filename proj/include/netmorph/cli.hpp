// Copyright 2026 The netmorph Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NETMORPH_CLI_HPP_
#define NETMORPH_CLI_HPP_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace netmorph::cli {

enum ExitCode : int { kPass = 0, kFail = 1, kUsage = 2 };

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// CSV helpers: one header row, comma separated, '.' decimal point.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table parse_csv(const std::string& text);
Table read_csv(const std::filesystem::path& path);
std::string format_csv(const Table& table);

}  // namespace netmorph::cli

#endif  // NETMORPH_CLI_HPP_
