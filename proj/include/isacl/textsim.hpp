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

// Rouge-L and Rouge-1 between a generated continuation and its reference.

#ifndef ISACL_TEXTSIM_HPP_
#define ISACL_TEXTSIM_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "isacl/triplets.hpp"

namespace isacl {

using TokenSeq = std::vector<std::string>;

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
};

// Lowercases and splits on runs of non-alphanumeric code points (Unicode
// classification from the C.UTF-8 locale). Invalid UTF-8 bytes act as
// separators. No stemming.
TokenSeq tokenize(std::string_view text);

// Length of the longest common subsequence, two-row dynamic program.
std::size_t lcs_length(std::span<const std::string> a,
                       std::span<const std::string> b);

// P = LCS/|candidate|, R = LCS/|reference|; all zero if either side is empty.
RougeScore rouge_l(std::span<const std::string> candidate,
                   std::span<const std::string> reference);

// Unigram overlap with per-token counts clipped to the reference count.
RougeScore rouge_1(std::span<const std::string> candidate,
                   std::span<const std::string> reference);

// Harmonic mean, 0 when either input is 0.
double f_measure(double precision, double recall);

// Fills rouge_l_f (and rouge_1_f when requested) by comparing each output
// against its reference.
void score_triplets(std::span<Triplet> triplets, bool with_rouge_1 = false);

}  // namespace isacl

#endif  // ISACL_TEXTSIM_HPP_
