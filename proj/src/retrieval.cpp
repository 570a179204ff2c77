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

#include "medaug/retrieval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include "medaug/common.hpp"

namespace medaug::retrieval {

std::string_view to_string(DocKind kind) {
  return kind == DocKind::kTextGuideline ? "text_guideline" : "image_case";
}

DocKind parse_doc_kind(std::string_view s) {
  if (s == "text_guideline") return DocKind::kTextGuideline;
  if (s == "image_case") return DocKind::kImageCase;
  throw_data("unknown doc kind: " + std::string(s));
}

json to_json(const RetrievalDoc& doc) {
  json j = {{"doc_id", doc.doc_id}, {"kind", to_string(doc.kind)}, {"text", doc.text}};
  if (doc.image_uri) j["image"] = *doc.image_uri;
  if (doc.text_vec) j["text_vec"] = *doc.text_vec;
  if (doc.image_vec) j["image_vec"] = *doc.image_vec;
  if (doc.source_case) j["source_case"] = *doc.source_case;
  return j;
}

RetrievalDoc doc_from_json(const json& j) {
  RetrievalDoc d;
  try {
    d.doc_id = j.at("doc_id").get<std::string>();
    d.kind = parse_doc_kind(j.at("kind").get<std::string>());
    d.text = j.value("text", "");
    if (j.contains("image") && !j["image"].is_null())
      d.image_uri = j["image"].get<std::string>();
    if (j.contains("text_vec") && !j["text_vec"].is_null())
      d.text_vec = j["text_vec"].get<Vector>();
    if (j.contains("image_vec") && !j["image_vec"].is_null())
      d.image_vec = j["image_vec"].get<Vector>();
    if (j.contains("source_case") && !j["source_case"].is_null())
      d.source_case = j["source_case"].get<std::string>();
  } catch (const json::exception& e) {
    throw_data(std::string("malformed retrieval doc: ") + e.what());
  }
  return d;
}

std::vector<RetrievalDoc> case_docs(const std::vector<CaseRecord>& records) {
  std::vector<RetrievalDoc> out;
  for (const auto& r : records) {
    if (!r.human_annotated) continue;
    for (const auto& im : r.images) {
      std::vector<std::string> parts;
      if (im.caption && !trim(*im.caption).empty()) parts.push_back(trim(*im.caption));
      if (im.findings && !trim(*im.findings).empty()) parts.push_back(trim(*im.findings));
      if (r.image_findings && !trim(*r.image_findings).empty()) {
        parts.push_back(trim(*r.image_findings));
      }
      RetrievalDoc d;
      d.doc_id = r.id + "/" + im.image_id;
      d.kind = DocKind::kImageCase;
      for (const auto& p : parts) d.text += (d.text.empty() ? "" : "\n") + p;
      d.image_uri = im.uri;
      d.source_case = r.id;
      out.push_back(std::move(d));
    }
  }
  return out;
}

json to_json(const RetrievalResult& r) {
  return {{"doc_id", r.doc_id}, {"score", r.score}, {"kind", to_string(r.kind)}};
}

bool ranks_before(const RetrievalResult& a, const RetrievalResult& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw_data(fmt::format("dimension mismatch: {} vs {}", a.size(), b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize(Vector& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n == 0.0) throw_data("cannot normalise a zero vector");
  for (double& x : v) x /= n;
}

// ---------------------------------------------------------------------------
// Embedders
// ---------------------------------------------------------------------------

Vector Embedder::embed_image(const std::string& uri) {
  return embed_image_bytes(read_file_bytes(uri));
}

std::string stub_text_payload(std::string_view text) {
  return "text:" + std::string(text);
}

std::string stub_image_payload(std::string_view bytes) {
  return "image:" + std::string(bytes);
}

Vector stub_embedding(std::string_view payload, std::size_t dim) {
  Vector v;
  v.reserve(dim);
  std::string buf(payload);
  buf.append(4, '\0');
  for (std::uint32_t block = 0; v.size() < dim; ++block) {
    const std::size_t p = payload.size();
    buf[p + 0] = static_cast<char>((block >> 24) & 0xFF);
    buf[p + 1] = static_cast<char>((block >> 16) & 0xFF);
    buf[p + 2] = static_cast<char>((block >> 8) & 0xFF);
    buf[p + 3] = static_cast<char>(block & 0xFF);
    const auto digest = sha256(buf);
    for (std::size_t w = 0; w + 4 <= digest.size() && v.size() < dim; w += 4) {
      const std::uint32_t u = (std::uint32_t{digest[w]} << 24) |
                              (std::uint32_t{digest[w + 1]} << 16) |
                              (std::uint32_t{digest[w + 2]} << 8) |
                              std::uint32_t{digest[w + 3]};
      v.push_back(static_cast<double>(static_cast<std::int32_t>(u)) / 2147483648.0);
    }
  }
  normalize(v);
  return v;
}

Vector StubEmbedder::embed_text(std::string_view text) {
  return stub_embedding(stub_text_payload(text), dim_);
}

Vector StubEmbedder::embed_image_bytes(std::string_view bytes) {
  return stub_embedding(stub_image_payload(bytes), dim_);
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

namespace {

std::optional<Vector> modality_sum(const std::optional<Vector>& a,
                                   const std::optional<Vector>& b) {
  if (!a && !b) return std::nullopt;
  if (!a) return *b;
  if (!b) return *a;
  if (a->size() != b->size()) {
    throw_data(fmt::format("dimension mismatch: {} vs {}", a->size(), b->size()));
  }
  Vector s(a->size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = (*a)[i] + (*b)[i];
  return s;
}

}  // namespace

double fusion_score(const Query& q, const RetrievalDoc& c) {
  const auto qs = modality_sum(q.text_vec, q.image_vec);
  const auto cs = modality_sum(c.text_vec, c.image_vec);
  if (!qs) throw_data("query has no embedding");
  if (!cs) throw_data("document " + c.doc_id + " has no embedding");
  return dot(*qs, *cs);
}

void embed_query(Query& q, Embedder& embedder) {
  if (!q.text && !q.image_uri && !q.text_vec && !q.image_vec) {
    throw_usage("query needs text or an image");
  }
  if (q.text && !q.text_vec && !trim(*q.text).empty())
    q.text_vec = embedder.embed_text(*q.text);
  if (q.image_uri && !q.image_vec) q.image_vec = embedder.embed_image(*q.image_uri);
}

// ---------------------------------------------------------------------------
// Index
// ---------------------------------------------------------------------------

struct IndexBuilder {
  static Index make(std::size_t dim, std::vector<RetrievalDoc> docs) {
    Index idx;
    idx.dim_ = dim;
    idx.docs_ = std::move(docs);
    idx.fused_.assign(idx.docs_.size() * dim, 0.0);
    for (std::size_t d = 0; d < idx.docs_.size(); ++d) {
      idx.by_id_.emplace(idx.docs_[d].doc_id, d);
      const auto sum = modality_sum(idx.docs_[d].text_vec, idx.docs_[d].image_vec);
      if (!sum) throw_data("document " + idx.docs_[d].doc_id + " has no embedding");
      if (sum->size() != dim) throw_data("dimension mismatch in " + idx.docs_[d].doc_id);
      std::copy(sum->begin(), sum->end(), idx.fused_.begin() + d * dim);
    }
    return idx;
  }
};

const RetrievalDoc* Index::find(const std::string& doc_id) const {
  auto it = by_id_.find(doc_id);
  return it == by_id_.end() ? nullptr : &docs_[it->second];
}

std::vector<RetrievalResult> Index::rank_all(const Query& q) const {
  const auto qs = modality_sum(q.text_vec, q.image_vec);
  if (!qs) throw_data("query has no embedding");
  if (qs->size() != dim_) {
    throw_data(fmt::format("dimension mismatch: query {} vs index {}", qs->size(), dim_));
  }
  std::vector<RetrievalResult> out;
  out.reserve(docs_.size());
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    const auto& doc = docs_[d];
    if (q.case_id && doc.source_case && *doc.source_case == *q.case_id) continue;
    const double* row = fused_.data() + d * dim_;
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += (*qs)[i] * row[i];
    out.push_back({doc.doc_id, s, doc.kind});
  }
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

namespace {

constexpr char kMagic[8] = {'M', 'E', 'D', 'A', 'U', 'G', 'I', 'X'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    u64(bits);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void opt_str(const std::optional<std::string>& s) {
    u8(s ? 1 : 0);
    if (s) str(*s);
  }
  void opt_vec(const std::optional<Vector>& v) {
    u8(v ? 1 : 0);
    if (v)
      for (double x : *v) f64(x);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{u8()} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{u8()} << (8 * i);
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::optional<std::string> opt_str() {
    if (!u8()) return std::nullopt;
    return str();
  }
  std::optional<Vector> opt_vec(std::size_t dim) {
    if (!u8()) return std::nullopt;
    Vector v(dim);
    for (double& x : v) x = f64();
    return v;
  }
  void bytes(char* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, in_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw_data("truncated index file");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string Index::serialize() const {
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kIndexFormatVersion);
  w.u32(static_cast<std::uint32_t>(dim_));
  w.u64(docs_.size());
  for (const auto& d : docs_) {
    w.str(d.doc_id);
    w.u8(d.kind == DocKind::kTextGuideline ? 0 : 1);
    w.str(d.text);
    w.opt_str(d.image_uri);
    w.opt_str(d.source_case);
    w.opt_vec(d.text_vec);
    w.opt_vec(d.image_vec);
  }
  return w.take();
}

Index Index::deserialize(std::string_view bytes) {
  Reader r(bytes);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw_data("not a medaug index file");
  const std::uint32_t version = r.u32();
  if (version != kIndexFormatVersion) {
    throw_data(fmt::format("unsupported index format_version {}", version));
  }
  const std::size_t dim = r.u32();
  const std::uint64_t count = r.u64();
  std::vector<RetrievalDoc> docs;
  docs.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    RetrievalDoc d;
    d.doc_id = r.str();
    d.kind = r.u8() == 0 ? DocKind::kTextGuideline : DocKind::kImageCase;
    d.text = r.str();
    d.image_uri = r.opt_str();
    d.source_case = r.opt_str();
    d.text_vec = r.opt_vec(dim);
    d.image_vec = r.opt_vec(dim);
    docs.push_back(std::move(d));
  }
  if (!r.done()) throw_data("trailing bytes in index file");
  return IndexBuilder::make(dim, std::move(docs));
}

void Index::save(const std::string& path) const { write_text(path, serialize()); }

Index Index::load(const std::string& path) { return deserialize(read_file_bytes(path)); }

BuildResult build_index(const std::vector<RetrievalDoc>& docs, Embedder& embedder) {
  if (docs.empty()) throw_data("empty corpus");
  const std::size_t dim = embedder.dim();
  BuildResult result;
  std::vector<RetrievalDoc> kept;
  std::set<std::string> seen;

  auto with_retry = [](auto&& fn) -> Vector {
    try {
      return fn();
    } catch (const std::exception&) {
      return fn();
    }
  };

  for (const auto& src : docs) {
    RetrievalDoc d = src;
    auto reject = [&](std::string reason) {
      result.rejects.push_back({d.doc_id, std::move(reason)});
    };
    if (d.doc_id.empty()) {
      reject("empty doc_id");
      continue;
    }
    if (!seen.insert(d.doc_id).second) {
      reject("duplicate doc_id");
      continue;
    }
    if (d.kind == DocKind::kTextGuideline && (d.image_vec || d.image_uri)) {
      reject("text_guideline must not carry an image");
      continue;
    }
    bool bad = false;
    for (auto* vec : {&d.text_vec, &d.image_vec}) {
      if (!*vec || bad) continue;
      if ((*vec)->size() != dim) {
        reject(fmt::format("dimension mismatch: expected {}, got {}", dim, (*vec)->size()));
        bad = true;
        continue;
      }
      try {
        normalize(**vec);
      } catch (const Error&) {
        reject("zero vector");
        bad = true;
      }
    }
    if (bad) continue;
    try {
      if (!d.text_vec && !trim(d.text).empty()) {
        d.text_vec = with_retry([&] { return embedder.embed_text(d.text); });
      }
      if (!d.image_vec && d.image_uri) {
        d.image_vec = with_retry([&] { return embedder.embed_image(*d.image_uri); });
      }
    } catch (const std::exception& e) {
      reject(std::string("embedding failure: ") + e.what());
      continue;
    }
    if (!d.text_vec && !d.image_vec) {
      reject("no embeddable content");
      continue;
    }
    for (auto* vec : {&d.text_vec, &d.image_vec}) {
      if (*vec && (*vec)->size() != dim) {
        reject(fmt::format("embedder returned dimension {}, expected {}", (*vec)->size(), dim));
        bad = true;
        break;
      }
    }
    if (bad) continue;
    kept.push_back(std::move(d));
  }
  if (kept.empty()) throw_data("empty corpus");
  result.index = IndexBuilder::make(dim, std::move(kept));
  return result;
}

std::vector<RetrievalResult> retrieve_context(const Index& index, const Query& q,
                                              const RetrieveOptions& options) {
  if (index.size() == 0) throw_data("empty index");
  if (options.k < 1) throw_usage("k must be >= 1");
  std::vector<RetrievalResult> ranked = index.rank_all(q);
  std::vector<RetrievalResult> top(
      ranked.begin(), ranked.begin() + std::min(options.k, ranked.size()));
  if (!options.require_guideline) return top;

  const auto is_guideline = [](const RetrievalResult& r) {
    return r.kind == DocKind::kTextGuideline;
  };
  if (std::any_of(top.begin(), top.end(), is_guideline)) return top;
  auto best = std::find_if(ranked.begin(), ranked.end(), is_guideline);
  if (best == ranked.end()) return top;
  // The guideline ranked below every kept doc, so it takes the last slot
  // without breaking the ordering.
  top.back() = *best;
  return top;
}

}  // namespace medaug::retrieval
