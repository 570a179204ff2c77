// Copyright 2026 The medaug Authors
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

// Python bindings. Structured values cross the boundary as JSON text; the
// medaug package wraps them into dicts and lists.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "medaug/analyze.hpp"
#include "medaug/common.hpp"
#include "medaug/corpus.hpp"
#include "medaug/judge.hpp"
#include "medaug/metrics.hpp"
#include "medaug/retrieval.hpp"

namespace py = pybind11;
using medaug::json;

namespace {

std::unique_ptr<medaug::retrieval::Embedder> embedder_for(std::size_t dim,
                                                          const std::string& url) {
  if (url.empty()) return std::make_unique<medaug::retrieval::StubEmbedder>(dim);
  return std::make_unique<medaug::retrieval::HttpEmbedder>(url);
}

std::string ingest_json(const std::string& path, const std::string& format) {
  auto res = medaug::ingest(path, medaug::parse_record_format(format));
  json out = {{"records", json::array()}, {"rejects", json::array()}};
  for (const auto& r : res.records) out["records"].push_back(medaug::to_json(r));
  for (const auto& r : res.rejects) out["rejects"].push_back(medaug::to_json(r));
  return out.dump();
}

std::string sample_slices_json(const std::string& volume, int cap) {
  // Parse through the record reader so image rows get the same validation.
  const json record = {{"id", "volume"}, {"images", json::parse(volume)}};
  json arr = json::array();
  for (const auto& im : medaug::sample_slices(medaug::case_from_json(record).images, cap)) {
    arr.push_back(medaug::to_json(im));
  }
  return arr.dump();
}

std::string distribution_json(const std::vector<std::string>& labels, std::uint64_t seed) {
  std::vector<medaug::ModalityLabel> parsed;
  for (const auto& l : labels) parsed.push_back(medaug::parse_modality(l));
  return medaug::analyze::to_json(medaug::analyze::distribution_report(parsed, seed)).dump();
}

std::string accuracy_json(const std::vector<std::string>& outputs,
                          const std::vector<std::string>& gold, int options) {
  return medaug::metrics::to_json(medaug::metrics::accuracy(outputs, gold, options)).dump();
}

std::optional<std::string> extract_letter(const std::string& output, int options) {
  auto c = medaug::metrics::extract_letter(output, options);
  if (!c) return std::nullopt;
  return std::string(1, *c);
}

py::tuple umls_prf(const std::set<std::string>& ref, const std::set<std::string>& gen) {
  const auto p = medaug::metrics::umls_prf(ref, gen);
  return py::make_tuple(p.precision, p.recall, p.f1);
}

class PyIndex {
 public:
  static std::pair<PyIndex, std::string> build(const std::string& docs, std::size_t dim,
                                               const std::string& url) {
    std::vector<medaug::retrieval::RetrievalDoc> parsed;
    for (const auto& j : json::parse(docs)) parsed.push_back(medaug::retrieval::doc_from_json(j));
    auto emb = embedder_for(dim, url);
    auto built = medaug::retrieval::build_index(parsed, *emb);
    json rejects = json::array();
    for (const auto& r : built.rejects) rejects.push_back({{"doc_id", r.doc_id}, {"reason", r.reason}});
    return {PyIndex(std::move(built.index)), rejects.dump()};
  }
  static PyIndex load(const std::string& path) {
    return PyIndex(medaug::retrieval::Index::load(path));
  }

  void save(const std::string& path) const { index_.save(path); }
  std::size_t size() const { return index_.size(); }
  std::size_t dim() const { return index_.dim(); }

  std::string retrieve(const std::optional<std::string>& text,
                       const std::optional<std::string>& image, std::size_t k,
                       bool require_guideline, const std::optional<std::string>& case_id,
                       const std::string& url) const {
    medaug::retrieval::Query q;
    q.text = text;
    q.image_uri = image;
    q.case_id = case_id;
    auto emb = embedder_for(index_.dim(), url);
    medaug::retrieval::embed_query(q, *emb);
    json out = json::array();
    for (const auto& r : medaug::retrieval::retrieve_context(index_, q, {k, require_guideline})) {
      out.push_back(medaug::retrieval::to_json(r));
    }
    return out.dump();
  }

 private:
  explicit PyIndex(medaug::retrieval::Index index) : index_(std::move(index)) {}
  medaug::retrieval::Index index_;
};

}  // namespace

PYBIND11_MODULE(_medaug, m) {
  m.doc() = "medaug core bindings";
  m.attr("__version__") = std::string(medaug::kVersion);

  // Kept alive for the interpreter's lifetime; the module holds a reference.
  static py::handle error_type =
      py::exception<medaug::Error>(m, "Error", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const medaug::Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      exc.attr("exit_code") = e.exit_code();
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    } catch (const json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("sha256_hex", [](py::bytes b) { return medaug::sha256_hex(std::string(b)); });
  m.def("round_half_up", &medaug::round_half_up, py::arg("value"), py::arg("digits"));

  m.def("stub_embedding",
        [](py::bytes payload, std::size_t dim) {
          return medaug::retrieval::stub_embedding(std::string(payload), dim);
        },
        py::arg("payload"), py::arg("dim"));
  m.def("stub_text_payload", [](const std::string& t) {
    return py::bytes(medaug::retrieval::stub_text_payload(t));
  });
  m.def("stub_image_payload", [](py::bytes b) {
    return py::bytes(medaug::retrieval::stub_image_payload(std::string(b)));
  });

  m.def("even_spacing", &medaug::even_spacing, py::arg("n"), py::arg("m"));
  m.def("_sample_slices", &sample_slices_json);
  m.def("_ingest", &ingest_json);
  m.def("_distribution", &distribution_json);
  m.def("_accuracy", &accuracy_json);

  m.def("extract_letter", &extract_letter, py::arg("output"), py::arg("option_count") = 5);
  m.def("umls_prf", &umls_prf, py::arg("reference"), py::arg("generated"));
  m.def("overall", &medaug::judge::overall, py::arg("key_points"), py::arg("inference"),
        py::arg("evidence"));
  m.def("parse_score", &medaug::judge::parse_score, py::arg("reply"));

  py::class_<medaug::metrics::ConceptLexicon>(m, "Lexicon")
      .def(py::init<>())
      .def_static("from_jsonl", &medaug::metrics::ConceptLexicon::from_jsonl)
      .def("add", &medaug::metrics::ConceptLexicon::add)
      .def("extract", &medaug::metrics::ConceptLexicon::extract)
      .def("version", &medaug::metrics::ConceptLexicon::version)
      .def("__len__", &medaug::metrics::ConceptLexicon::size);

  py::class_<PyIndex>(m, "_Index")
      .def_static("build", &PyIndex::build)
      .def_static("load", &PyIndex::load)
      .def("save", &PyIndex::save)
      .def("retrieve", &PyIndex::retrieve)
      .def_property_readonly("dim", &PyIndex::dim)
      .def("__len__", &PyIndex::size);
}
