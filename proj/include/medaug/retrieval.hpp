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

// Dual retrieval corpus: pure-text guidelines and image-text cases, scored
// by summing each side's modality vectors before the dot product.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "medaug/corpus.hpp"
#include "medaug/io.hpp"

namespace medaug::retrieval {

using Vector = std::vector<double>;

inline constexpr std::uint32_t kIndexFormatVersion = 1;
inline constexpr std::size_t kDefaultDim = 512;

enum class DocKind { kTextGuideline, kImageCase };

std::string_view to_string(DocKind kind);
DocKind parse_doc_kind(std::string_view s);

struct RetrievalDoc {
  std::string doc_id;
  DocKind kind = DocKind::kImageCase;
  std::string text;
  std::optional<std::string> image_uri;
  std::optional<Vector> text_vec;
  std::optional<Vector> image_vec;
  std::optional<std::string> source_case;
};

json to_json(const RetrievalDoc& doc);
RetrievalDoc doc_from_json(const json& j);

/// One image_case doc per image of every human-annotated record, id
/// "<case>/<image>", text = image caption or findings plus case findings.
std::vector<RetrievalDoc> case_docs(const std::vector<CaseRecord>& records);

struct Query {
  std::optional<std::string> text;
  std::optional<std::string> image_uri;
  std::optional<Vector> text_vec;
  std::optional<Vector> image_vec;
  /// Case the query was built from; docs derived from it are skipped.
  std::optional<std::string> case_id;
};

struct RetrievalResult {
  std::string doc_id;
  double score = 0.0;
  DocKind kind = DocKind::kImageCase;
};

json to_json(const RetrievalResult& r);

/// Descending score, ties by ascending doc_id.
bool ranks_before(const RetrievalResult& a, const RetrievalResult& b);

double dot(const Vector& a, const Vector& b);
void normalize(Vector& v);

// ---------------------------------------------------------------------------
// Embedding
// ---------------------------------------------------------------------------

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dim() const = 0;
  virtual Vector embed_text(std::string_view text) = 0;
  virtual Vector embed_image_bytes(std::string_view bytes) = 0;
  virtual std::string tag() const = 0;

  /// Reads the file and embeds its bytes.
  Vector embed_image(const std::string& uri);
};

/// Payload framing shared by every stub implementation.
std::string stub_text_payload(std::string_view text);
std::string stub_image_payload(std::string_view bytes);

/// Block i = SHA-256(payload || uint32_be(i)); each big-endian 4-byte word
/// is read as int32 / 2^31; the first `dim` values are L2-normalised.
Vector stub_embedding(std::string_view payload, std::size_t dim);

class StubEmbedder final : public Embedder {
 public:
  explicit StubEmbedder(std::size_t dim = kDefaultDim) : dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  Vector embed_text(std::string_view text) override;
  Vector embed_image_bytes(std::string_view bytes) override;
  std::string tag() const override { return "stub"; }

 private:
  std::size_t dim_;
};

/// Client for the embedding service (POST /embed, GET /health).
class HttpEmbedder final : public Embedder {
 public:
  /// Queries /health once to learn the dimension.
  explicit HttpEmbedder(std::string base_url, std::string model = "stub");
  std::size_t dim() const override { return dim_; }
  Vector embed_text(std::string_view text) override;
  Vector embed_image_bytes(std::string_view bytes) override;
  std::string tag() const override { return "http:" + model_; }

 private:
  Vector post(const json& body);

  std::string base_url_;
  std::string model_;
  std::size_t dim_ = 0;
};

std::string base64_encode(std::string_view bytes);

// ---------------------------------------------------------------------------
// Scoring and index
// ---------------------------------------------------------------------------

/// (q.text + q.image) . (c.text + c.image) with absent vectors as zero.
double fusion_score(const Query& q, const RetrievalDoc& c);

/// Fills the query's missing vectors from its text and image.
void embed_query(Query& q, Embedder& embedder);

/// Immutable after construction; safe for concurrent readers.
class Index {
 public:
  Index() = default;

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return docs_.size(); }
  const std::vector<RetrievalDoc>& docs() const { return docs_; }
  /// nullptr when absent.
  const RetrievalDoc* find(const std::string& doc_id) const;

  /// Every eligible doc scored and ranked; no top-k cut.
  std::vector<RetrievalResult> rank_all(const Query& q) const;

  std::string serialize() const;
  static Index deserialize(std::string_view bytes);
  void save(const std::string& path) const;
  static Index load(const std::string& path);

 private:
  friend struct IndexBuilder;

  std::size_t dim_ = 0;
  std::vector<RetrievalDoc> docs_;
  std::unordered_map<std::string, std::size_t> by_id_;
  /// Row-major doc_count x dim: per-doc sum of modality vectors.
  std::vector<double> fused_;
};

struct DocReject {
  std::string doc_id;
  std::string reason;
};

struct BuildResult {
  Index index;
  std::vector<DocReject> rejects;
};

/// Embeds every available modality, normalises, drops invalid docs.
/// Throws "empty corpus" when nothing is indexable.
BuildResult build_index(const std::vector<RetrievalDoc>& docs, Embedder& embedder);

struct RetrieveOptions {
  std::size_t k = 4;
  /// Force at least one text guideline into the result when any exists.
  bool require_guideline = true;
};

std::vector<RetrievalResult> retrieve_context(const Index& index, const Query& q,
                                              const RetrieveOptions& options = {});

}  // namespace medaug::retrieval
