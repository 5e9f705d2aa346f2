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

// Reference LCS implementations that share no code with the library.

#ifndef ISACL_TESTS_LCS_ORACLE_HPP_
#define ISACL_TESTS_LCS_ORACLE_HPP_

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace isacl::testing {

// Enumerates every subsequence of the shorter input (2^n masks) and checks
// whether it is a subsequence of the longer one. Only for n <= ~16.
inline std::size_t brute_force_lcs(const std::vector<std::string>& a,
                                   const std::vector<std::string>& b) {
  const auto& s = a.size() <= b.size() ? a : b;
  const auto& l = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  const std::size_t n = s.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    std::size_t bits = __builtin_popcountll(mask);
    if (bits <= best) continue;
    std::size_t j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(mask >> i & 1)) continue;
      while (j < l.size() && l[j] != s[i]) ++j;
      if (j == l.size()) ok = false;
      else ++j;
    }
    if (ok) best = bits;
  }
  return best;
}

// Top-down recursion with memoisation.
inline std::size_t memo_lcs(const std::vector<std::string>& a,
                            const std::vector<std::string>& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  auto rec = [&](auto&& self, std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size() || j == b.size()) return 0;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::size_t v = a[i] == b[j]
                        ? 1 + self(self, i + 1, j + 1)
                        : std::max(self(self, i + 1, j), self(self, i, j + 1));
    memo.emplace(key, v);
    return v;
  };
  return rec(rec, 0, 0);
}

}  // namespace isacl::testing

#endif  // ISACL_TESTS_LCS_ORACLE_HPP_
