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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "cli.hpp"
#include "isacl/error.hpp"
#include "isacl/evalkit.hpp"
#include "isacl/judge.hpp"
#include "isacl/labeler.hpp"
#include "isacl/refdb.hpp"
#include "isacl/service.hpp"
#include "isacl/state_io.hpp"
#include "isacl/synthetic.hpp"
#include "isacl/textsim.hpp"
#include "isacl/triplets.hpp"

namespace py = pybind11;
using namespace isacl;

namespace {

using FloatMatrix = py::array_t<float, py::array::c_style | py::array::forcecast>;
using ByteVector = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

std::vector<float> to_vector(const FloatMatrix& a) {
  if (a.ndim() != 1) throw InvalidArgument("expected a 1-D float array");
  return {a.data(), a.data() + a.size()};
}

FloatMatrix matrix(const std::vector<float>& flat, std::size_t rows,
                   std::size_t cols) {
  FloatMatrix out({rows, cols});
  std::copy(flat.begin(), flat.end(), out.mutable_data());
  return out;
}

LabeledDataset dataset_from_arrays(const FloatMatrix& features,
                                   const ByteVector& labels,
                                   std::size_t reference_dim) {
  if (features.ndim() != 2) throw InvalidArgument("features must be 2-D");
  if (labels.ndim() != 1 || labels.shape(0) != features.shape(0)) {
    throw InvalidArgument("labels must be 1-D with one entry per row");
  }
  LabeledDataset ds;
  ds.feature_dim = static_cast<std::size_t>(features.shape(1));
  ds.provenance.with_reference = reference_dim > 0;
  ds.provenance.reference_dim = static_cast<std::uint32_t>(reference_dim);
  const auto n = static_cast<std::size_t>(features.shape(0));
  for (std::size_t i = 0; i < n; ++i) {
    ds.add("row-" + std::to_string(i),
           std::span<const float>(features.data() + i * ds.feature_dim,
                                  ds.feature_dim),
           labels.data()[i]);
  }
  return ds;
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["tp"] = r.counts.tp;
  d["fp"] = r.counts.fp;
  d["fn"] = r.counts.fn;
  d["tn"] = r.counts.tn;
  d["accuracy"] = r.accuracy;
  d["precision"] = r.precision;
  d["recall"] = r.recall;
  d["f1"] = r.f1;
  return d;
}

}  // namespace

PYBIND11_MODULE(_isacl, m) {
  m.doc() = "Internal-state leakage judge: core operations";

  auto base = py::register_exception<Error>(m, "IsaclError");
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  auto data = py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", data.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  // Text similarity.
  m.def("tokenize", &tokenize, py::arg("text"));
  m.def(
      "lcs_length",
      [](const TokenSeq& a, const TokenSeq& b) { return lcs_length(a, b); },
      py::arg("a"), py::arg("b"));
  m.def(
      "rouge_l",
      [](const std::string& candidate, const std::string& reference) {
        const auto s = rouge_l(tokenize(candidate), tokenize(reference));
        return py::make_tuple(s.precision, s.recall, s.f_measure);
      },
      py::arg("candidate"), py::arg("reference"),
      "(precision, recall, f) of the longest common token subsequence");
  m.def(
      "rouge_1",
      [](const std::string& candidate, const std::string& reference) {
        const auto s = rouge_1(tokenize(candidate), tokenize(reference));
        return py::make_tuple(s.precision, s.recall, s.f_measure);
      },
      py::arg("candidate"), py::arg("reference"));
  m.def(
      "score_triplets_file",
      [](const std::filesystem::path& in, const std::filesystem::path& out,
         bool with_rouge_1) {
        auto t = read_triplets(in);
        score_triplets(t, with_rouge_1);
        write_triplets(out, t);
        return t.size();
      },
      py::arg("input"), py::arg("output"), py::arg("with_rouge_1") = false);

  // Labeling.
  m.def(
      "partition",
      [](const std::vector<double>& scores, double p, std::uint64_t seed) {
        const auto labels = partition(scores, {p, seed});
        std::vector<int> out;
        out.reserve(labels.size());
        for (auto l : labels) out.push_back(static_cast<int>(l));
        return out;
      },
      py::arg("scores"), py::arg("p") = 0.2, py::arg("seed") = 0,
      "Per-score label: 0 Leak, 1 NonDisclosure, 2 discarded");

  // State files.
  m.def(
      "read_state_file",
      [](const std::filesystem::path& path) {
        const auto f = read_state_file(path);
        std::vector<float> flat;
        py::list ids;
        std::vector<std::uint8_t> labels;
        for (const auto& r : f.records) {
          ids.append(r.id);
          labels.push_back(static_cast<std::uint8_t>(r.label));
          flat.insert(flat.end(), r.vector.begin(), r.vector.end());
        }
        py::dict header;
        header["version"] = f.header.version;
        header["model_id"] = f.header.model_id;
        header["layer_index"] = f.header.layer_index;
        header["pooling"] = std::string(pooling_name(f.header.pooling));
        header["dim"] = f.header.dim;
        header["count"] = f.header.count;
        return py::make_tuple(header, ids, py::array(py::cast(labels)),
                              matrix(flat, f.records.size(), f.header.dim));
      },
      py::arg("path"), "Returns (header, ids, labels, vectors)");
  m.def(
      "write_state_file",
      [](const std::filesystem::path& path, const std::vector<std::string>& ids,
         const FloatMatrix& vectors, std::optional<std::vector<int>> labels,
         const std::string& model_id, int layer_index,
         const std::string& pooling) {
        if (vectors.ndim() != 2 ||
            static_cast<std::size_t>(vectors.shape(0)) != ids.size()) {
          throw InvalidArgument("vectors must be 2-D with one row per id");
        }
        StateFileHeader h;
        h.model_id = model_id;
        h.layer_index = layer_index;
        h.pooling = parse_pooling(pooling);
        h.dim = static_cast<std::uint32_t>(vectors.shape(1));
        h.count = ids.size();
        std::vector<StateRecord> recs;
        for (std::size_t i = 0; i < ids.size(); ++i) {
          StateRecord r;
          r.id = ids[i];
          r.label = labels ? static_cast<StateLabel>((*labels)[i])
                           : StateLabel::kUnlabeled;
          r.vector.assign(vectors.data() + i * h.dim,
                          vectors.data() + (i + 1) * h.dim);
          recs.push_back(std::move(r));
        }
        write_state_file(h, recs, path);
      },
      py::arg("path"), py::arg("ids"), py::arg("vectors"),
      py::arg("labels") = py::none(), py::arg("model_id") = "",
      py::arg("layer_index") = -1, py::arg("pooling") = "mean");

  // Synthetic data.
  m.def(
      "gen_synthetic",
      [](const std::string& mode, std::size_t dim, std::size_t count,
         double sigma, std::uint64_t seed) {
        SyntheticSpec spec;
        if (mode == "separable") {
          spec.mode = SyntheticMode::kSeparableGaussians;
        } else if (mode == "rag") {
          spec.mode = SyntheticMode::kRagDependent;
        } else {
          throw InvalidArgument("mode must be 'separable' or 'rag'");
        }
        spec.dim = dim;
        spec.count = count;
        spec.sigma = sigma;
        spec.seed = seed;
        const auto d = gen_synthetic(spec);
        std::vector<float> refs;
        for (const auto& r : d.references) refs.insert(refs.end(), r.begin(), r.end());
        py::object ref_array = py::none();
        if (!d.references.empty()) ref_array = matrix(refs, d.references.size(), dim);
        return py::make_tuple(matrix(d.dataset.features, d.dataset.size(), dim),
                              py::array(py::cast(d.dataset.labels)), ref_array);
      },
      py::arg("mode") = "separable", py::arg("dim") = 16,
      py::arg("count") = 1000, py::arg("sigma") = 0.5, py::arg("seed") = 0,
      "Returns (features, labels, references or None); label 1 = Leak");

  // Judge.
  py::class_<JudgeModel>(m, "JudgeModel")
      .def_property_readonly("input_dim", &JudgeModel::input_dim)
      .def_property_readonly("state_dim", &JudgeModel::state_dim)
      .def_property_readonly("hidden_dim",
                             [](const JudgeModel& j) { return j.net.hidden_dim(); })
      .def_property_readonly("reference_dim",
                             [](const JudgeModel& j) {
                               return j.provenance.reference_dim;
                             })
      .def_readwrite("tau", &JudgeModel::tau)
      .def(
          "predict",
          [](const JudgeModel& j, const FloatMatrix& state,
             std::optional<FloatMatrix> reference) {
            const auto s = to_vector(state);
            std::optional<std::vector<float>> r;
            if (reference) r = to_vector(*reference);
            const auto p =
                r ? predict(j, s, std::span<const float>(*r)) : predict(j, s);
            return py::make_tuple(p.probability, p.decision);
          },
          py::arg("state"), py::arg("reference") = py::none(),
          "(probability, decision) for one state vector")
      .def(
          "predict_proba",
          [](const JudgeModel& j, const FloatMatrix& features) {
            if (features.ndim() != 2 ||
                static_cast<std::size_t>(features.shape(1)) != j.input_dim()) {
              throw DimensionError("features must be N x input_dim");
            }
            std::vector<double> out;
            const auto n = static_cast<std::size_t>(features.shape(0));
            for (std::size_t i = 0; i < n; ++i) {
              out.push_back(predict_features(
                                j, std::span<const float>(
                                       features.data() + i * j.input_dim(),
                                       j.input_dim()))
                                .probability);
            }
            return py::array(py::cast(out));
          },
          py::arg("features"))
      .def("save", [](const JudgeModel& j, const std::filesystem::path& p) {
        save_model(j, p);
      });
  m.def("load_model", &load_model, py::arg("path"));
  m.def(
      "train",
      [](const FloatMatrix& features, const ByteVector& labels, int epochs,
         std::size_t batch_size, double lr, double weight_decay,
         std::size_t hidden, std::uint64_t seed, float tau,
         std::size_t reference_dim) {
        const auto ds = dataset_from_arrays(features, labels, reference_dim);
        TrainConfig c;
        c.epochs = epochs;
        c.batch_size = batch_size;
        c.learning_rate = lr;
        c.weight_decay = weight_decay;
        c.hidden_dim = hidden;
        c.seed = seed;
        c.tau = tau;
        py::gil_scoped_release release;
        return train(ds, c);
      },
      py::arg("features"), py::arg("labels"), py::arg("epochs") = 250,
      py::arg("batch_size") = 4, py::arg("lr") = 1e-3,
      py::arg("weight_decay") = 0.01, py::arg("hidden") = 256,
      py::arg("seed") = 0, py::arg("tau") = 0.5f, py::arg("reference_dim") = 0,
      "Train the gated-MLP judge; labels use 1 = Leak");
  m.def(
      "evaluate",
      [](const ByteVector& decisions, const ByteVector& labels) {
        return report_dict(evaluate(
            std::span<const std::uint8_t>(decisions.data(), decisions.size()),
            std::span<const std::uint8_t>(labels.data(), labels.size())));
      },
      py::arg("decisions"), py::arg("labels"));

  // Reference database.
  py::class_<ReferenceDatabase>(m, "ReferenceDatabase")
      .def_static(
          "build",
          [](const std::vector<std::string>& ids,
             const std::vector<std::string>& inputs,
             const std::vector<std::string>& references, const FloatMatrix& keys,
             std::optional<FloatMatrix> embeddings, std::size_t k,
             std::size_t nprobe, std::uint64_t seed) {
            if (keys.ndim() != 2 ||
                static_cast<std::size_t>(keys.shape(0)) != ids.size() ||
                inputs.size() != ids.size() || references.size() != ids.size()) {
              throw InvalidArgument("ids, inputs, references and key rows must align");
            }
            if (embeddings && (embeddings->ndim() != 2 ||
                               static_cast<std::size_t>(embeddings->shape(0)) !=
                                   ids.size())) {
              throw InvalidArgument("embeddings must be 2-D with one row per id");
            }
            const auto kd = static_cast<std::size_t>(keys.shape(1));
            std::vector<RefEntry> entries;
            for (std::size_t i = 0; i < ids.size(); ++i) {
              RefEntry e{ids[i], inputs[i], references[i],
                         {keys.data() + i * kd, keys.data() + (i + 1) * kd},
                         {}};
              if (embeddings) {
                const auto ed = static_cast<std::size_t>(embeddings->shape(1));
                e.embedding.assign(embeddings->data() + i * ed,
                                   embeddings->data() + (i + 1) * ed);
              }
              entries.push_back(std::move(e));
            }
            RefDbOptions o;
            o.k = k;
            o.nprobe = nprobe;
            o.seed = seed;
            return ReferenceDatabase::build(std::move(entries), o);
          },
          py::arg("ids"), py::arg("inputs"), py::arg("references"),
          py::arg("keys"), py::arg("embeddings") = py::none(),
          py::arg("k") = 0, py::arg("nprobe") = 1, py::arg("seed") = 0)
      .def_static("load", &ReferenceDatabase::load, py::arg("path"))
      .def("save", &ReferenceDatabase::save, py::arg("path"))
      .def("__len__", &ReferenceDatabase::size)
      .def_property_readonly("num_clusters", &ReferenceDatabase::num_clusters)
      .def(
          "search",
          [](const ReferenceDatabase& db, const FloatMatrix& query,
             std::optional<std::size_t> nprobe) {
            const auto r = db.search(to_vector(query), nprobe);
            py::dict d;
            d["id"] = r.entry->id;
            d["reference"] = r.entry->reference;
            d["similarity"] = r.similarity;
            d["distance_computations"] = r.distance_computations;
            return d;
          },
          py::arg("query"), py::arg("nprobe") = py::none());

  // Gate.
  py::class_<GateHandler>(m, "GateHandler")
      .def(py::init([](const JudgeModel& model,
                       std::optional<ReferenceDatabase> refdb,
                       std::optional<float> tau_override) {
             return GateHandler(model, std::move(refdb), tau_override);
           }),
           py::arg("model"), py::arg("refdb") = py::none(),
           py::arg("tau_override") = py::none())
      .def("handle_line", &GateHandler::handle_line, py::arg("line"),
           "One JSON request line in, one JSON response line out");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the isacl command line; returns (code, stdout, stderr)");
}
