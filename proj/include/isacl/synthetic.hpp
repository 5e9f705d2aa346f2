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

// Desk-scale synthetic data with known structure.
//
//   SeparableGaussians  classes at +mu*u and -mu*u (u a random unit vector,
//                       mu = 1) with isotropic noise sigma.
//   RagDependent        state vectors carry no label information on their
//                       own; the label is [<state, reference> > 0], so only
//                       the concatenated features are separable.

#ifndef ISACL_SYNTHETIC_HPP_
#define ISACL_SYNTHETIC_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "isacl/labeler.hpp"
#include "isacl/state_io.hpp"
#include "isacl/triplets.hpp"

namespace isacl {

enum class SyntheticMode { kSeparableGaussians, kRagDependent };

struct SyntheticSpec {
  SyntheticMode mode = SyntheticMode::kSeparableGaussians;
  std::size_t dim = 16;
  std::size_t count = 1000;  // must be even; classes are balanced
  double sigma = 0.5;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  LabeledDataset dataset;  // state features only
  // One reference embedding per row (RagDependent only), same dim as states.
  std::vector<std::vector<float>> references;
};

// Throws InvalidArgument for odd counts, dim 0 or sigma <= 0.
SyntheticData gen_synthetic(const SyntheticSpec& spec);

// Appends references[i] to row i; the result is marked with_reference.
LabeledDataset with_references(const LabeledDataset& states,
                               const std::vector<std::vector<float>>& references);

// Unlabeled corpus whose similarity scores track the feature margin. Each
// record draws a latent t ~ U(-1, 1); its state is t*u + sigma*noise and its
// score is (t + 1) / 2. Uses the SeparableGaussians geometry of `spec`.
struct ScoredCorpus {
  StateFile states;
  std::vector<Triplet> triplets;  // ids match states; only rouge_l_f is set
};
ScoredCorpus gen_scored_corpus(const SyntheticSpec& spec);

// Text corpus for end-to-end runs of the command-line pipeline. Outputs copy
// a random fraction (t + 1) / 2 of the reference tokens, so Rouge-L tracks
// the same latent margin that drives the state vectors. `embeddings` holds a
// unit-norm input embedding per record for building a reference database.
struct TextCorpus {
  std::vector<Triplet> triplets;  // unscored
  StateFile states;
  StateFile embeddings;
};
TextCorpus gen_text_corpus(const SyntheticSpec& spec,
                           std::size_t embedding_dim = 16);

}  // namespace isacl

#endif  // ISACL_SYNTHETIC_HPP_
