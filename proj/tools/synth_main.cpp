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


// Writes a desk-scale synthetic text corpus for exercising the pipeline:
//   triplets.jsonl   unscored (id, input, output, reference)
//   pairs.jsonl      (id, input, reference) for build-db
//   states.bin       judge state vectors
//   embeddings.bin   unit-norm input embeddings (refdb keys and references)

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "isacl/error.hpp"
#include "isacl/synthetic.hpp"
#include "json.hpp"

int main(int argc, char** argv) {
  CLI::App app("Generate the synthetic text corpus used by the pipeline demo",
               "isacl-synth");
  std::string out_dir;
  isacl::SyntheticSpec spec;
  spec.count = 600;
  spec.seed = 1;
  std::size_t embedding_dim = 16;
  app.add_option("--out-dir", out_dir, "Destination directory")->required();
  app.add_option("--count", spec.count, "Records (even)")->capture_default_str();
  app.add_option("--dim", spec.dim, "State dimension")->capture_default_str();
  app.add_option("--sigma", spec.sigma, "State noise")->capture_default_str();
  app.add_option("--seed", spec.seed, "Seed")->capture_default_str();
  app.add_option("--embedding-dim", embedding_dim, "Embedding dimension")
      ->capture_default_str();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const auto corpus = isacl::gen_text_corpus(spec, embedding_dim);
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    isacl::write_triplets(dir / "triplets.jsonl", corpus.triplets);
    std::ofstream pairs(dir / "pairs.jsonl", std::ios::binary);
    for (const auto& t : corpus.triplets) {
      pairs << nlohmann::json{{"id", t.id}, {"input", t.input},
                              {"reference", t.reference}}
                   .dump()
            << "\n";
    }
    if (!pairs.flush()) throw isacl::IoError("cannot write pairs.jsonl");
    isacl::write_state_file(corpus.states.header, corpus.states.records,
                            dir / "states.bin");
    isacl::write_state_file(corpus.embeddings.header, corpus.embeddings.records,
                            dir / "embeddings.bin");
  } catch (const isacl::InvalidArgument& e) {
    std::cerr << "isacl-synth: error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "isacl-synth: error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
