# Copyright 2026 The medaug Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Python access to the medaug core: ingest, slice sampling, retrieval, metrics."""

import json
import os

from ._medaug import (
    Error,
    Lexicon,
    __version__,
    even_spacing,
    extract_letter,
    overall,
    parse_score,
    round_half_up,
    sha256_hex,
    stub_embedding,
    stub_image_payload,
    stub_text_payload,
    umls_prf,
)
from . import _medaug

__all__ = [
    "Error",
    "Index",
    "Lexicon",
    "__version__",
    "accuracy",
    "distribution",
    "embed_text",
    "even_spacing",
    "extract_letter",
    "ingest",
    "overall",
    "parse_score",
    "round_half_up",
    "sample_slices",
    "sha256_hex",
    "stub_embedding",
    "umls_prf",
]


def embed_text(text, dim=512):
    """Built-in stub embedding of a text query."""
    return stub_embedding(stub_text_payload(text), dim)


def ingest(path, fmt="cases"):
    """Returns (records, rejects) as lists of dicts."""
    out = json.loads(_medaug._ingest(os.fspath(path), fmt))
    return out["records"], out["rejects"]


def sample_slices(volume, cap=20):
    return json.loads(_medaug._sample_slices(json.dumps(list(volume)), cap))


def distribution(labels, seed=0):
    return json.loads(_medaug._distribution(list(labels), seed))


def accuracy(outputs, gold, option_count=5):
    return json.loads(_medaug._accuracy(list(outputs), list(gold), option_count))


class Index:
    """Retrieval index over guideline and case documents."""

    def __init__(self, native, rejects=()):
        self._native = native
        self.rejects = list(rejects)

    @classmethod
    def build(cls, docs, dim=512, embedder_url=""):
        native, rejects = _medaug._Index.build(json.dumps(list(docs)), dim, embedder_url)
        return cls(native, json.loads(rejects))

    @classmethod
    def load(cls, path):
        return cls(_medaug._Index.load(os.fspath(path)))

    def save(self, path):
        self._native.save(os.fspath(path))

    @property
    def dim(self):
        return self._native.dim

    def __len__(self):
        return len(self._native)

    def retrieve(self, text=None, image=None, k=4, require_guideline=True, case_id=None,
                 embedder_url=""):
        return json.loads(
            self._native.retrieve(text, image, k, require_guideline, case_id, embedder_url))
