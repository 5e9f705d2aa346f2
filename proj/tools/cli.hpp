// Copyright 2026 The ISACL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ISACL_TOOLS_CLI_HPP_
#define ISACL_TOOLS_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace isacl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Entry point of the `isacl` command. Values for any option missing from
// argv are looked up in ISACL_<OPTION> environment variables and then in the
// JSON config file named by --config or ISACL_CONFIG.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

int run(int argc, char** argv);

// Closest name by edit distance, or "" when nothing is reasonably close.
std::string suggest(const std::string& word,
                    const std::vector<std::string>& candidates);

}  // namespace isacl::cli

#endif  // ISACL_TOOLS_CLI_HPP_
