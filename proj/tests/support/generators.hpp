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

// Hand-rolled generators shared by the property tests and the acceptance run.

#pragma once

#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "medaug/common.hpp"
#include "medaug/corpus.hpp"
#include "medaug/llm.hpp"
#include "medaug/retrieval.hpp"

namespace medaug::testing {

/// Volume of `n` slices with gapped, shuffled indices; each slice is annotated
/// with probability `annotated_rate`.
inline std::vector<ImageRef> make_volume(SeededRng& rng, std::size_t n, double annotated_rate) {
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i * 2 + rng.below(2));
  rng.shuffle(idx);
  std::vector<ImageRef> vol;
  for (std::size_t i = 0; i < n; ++i) {
    ImageRef im;
    im.image_id = "s" + std::to_string(idx[i]);
    im.uri = im.image_id + ".png";
    im.volume_id = "v";
    im.slice_index = idx[i];
    im.annotated_slice = rng.below(1000) < static_cast<std::uint64_t>(annotated_rate * 1000);
    vol.push_back(im);
  }
  return vol;
}

/// Annotation rate for trial `t`: mostly sparse, every seventh volume dense.
inline double annotation_rate(SeededRng& rng, int t) {
  return static_cast<double>(rng.below(4)) / 10.0 + (t % 7 == 0 ? 0.5 : 0.0);
}

inline retrieval::Vector random_vec(SeededRng& rng, std::size_t dim) {
  retrieval::Vector v(dim);
  for (auto& x : v) x = static_cast<double>(rng.below(2001)) / 1000.0 - 1.0;
  v[rng.below(dim)] += 0.5;
  return v;
}

/// Random corpus with shared vectors so ties occur.
inline std::vector<retrieval::RetrievalDoc> random_corpus(SeededRng& rng, std::size_t n,
                                                          std::size_t dim) {
  std::vector<retrieval::RetrievalDoc> docs;
  std::vector<retrieval::Vector> pool;
  for (std::size_t i = 0; i < n; ++i) {
    retrieval::RetrievalDoc d;
    d.doc_id = "d" + std::to_string(rng.below(1000)) + "-" + std::to_string(i);
    d.kind = rng.below(5) == 0 ? retrieval::DocKind::kTextGuideline
                               : retrieval::DocKind::kImageCase;
    retrieval::Vector t = (!pool.empty() && rng.below(6) == 0) ? pool[rng.below(pool.size())]
                                                               : random_vec(rng, dim);
    pool.push_back(t);
    d.text_vec = t;
    if (d.kind == retrieval::DocKind::kImageCase) {
      if (rng.below(3) == 0) d.text_vec.reset();
      d.image_vec = random_vec(rng, dim);
      d.source_case = "case" + std::to_string(rng.below(4));
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

inline const char* const kTenPoints =
    "{1. Budd-Chiari syndrome.2. Hepatic vein thrombosis.3. Caudate hypertrophy.4. Ascites."
    "5. Hepatomegaly.6. Mottled enhancement.7. Doppler first.8. MR venography.9. "
    "Anticoagulation.10. TIPS if refractory.}";

/// Judge double: fixed rubric lists, scores from `score_for`, records prompts.
struct ScriptedJudge {
  std::function<std::string(const llm::Request&)> score_for = [](const llm::Request&) {
    return std::string("2.5");
  };
  std::mutex mu;
  std::vector<llm::Request> scoring_requests;

  std::shared_ptr<llm::Provider> provider() {
    return std::make_shared<llm::FunctionProvider>([this](const llm::Request& r) {
      if (r.task.rfind("rubric_", 0) == 0) return llm::ProviderReply::ok(kTenPoints);
      if (r.task.rfind("score_", 0) == 0) {
        std::lock_guard lock(mu);
        scoring_requests.push_back(r);
        return llm::ProviderReply::ok(score_for(r));
      }
      return llm::ProviderReply::ok(r.messages.back().text);
    });
  }
};

}  // namespace medaug::testing
