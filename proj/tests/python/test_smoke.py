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

import hashlib
import json
import math
import struct
from pathlib import Path

import pytest

import medaug

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


def python_stub_embedding(payload: bytes, dim: int):
    raw = []
    block = 0
    while len(raw) < dim:
        digest = hashlib.sha256(payload + struct.pack(">I", block)).digest()
        raw.extend(v / 2**31 for v in struct.unpack(">8i", digest))
        block += 1
    raw = raw[:dim]
    norm = math.sqrt(sum(x * x for x in raw))
    return [x / norm for x in raw]


def read_jsonl(path):
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]


def test_version():
    assert medaug.__version__ == "0.1.0"


@pytest.mark.parametrize("payload", [b"text:", b"text:pleural effusion", b"image:\x89PNG\r\n"])
@pytest.mark.parametrize("dim", [1, 8, 9, 64, 512])
def test_stub_embedding_matches_hashlib(payload, dim):
    got = medaug.stub_embedding(payload, dim)
    want = python_stub_embedding(payload, dim)
    assert len(got) == dim
    assert max(abs(a - b) for a, b in zip(got, want)) <= 1e-9


def test_embed_text_uses_text_prefix():
    assert medaug.embed_text("abc", 16) == medaug.stub_embedding(b"text:abc", 16)


def test_ingest_fixture():
    records, rejects = medaug.ingest(FIXTURES / "e2e" / "cases.jsonl")
    assert [r["id"] for r in records] == ["eur-001", "pmc-002", "rad-003", "pmc-004"]
    assert rejects == [{"id": "bad-005", "line": 5, "reason": "slice_index without volume_id"}]


def test_sample_slices_keeps_annotated():
    records, _ = medaug.ingest(FIXTURES / "e2e" / "cases.jsonl")
    volume = records[2]["images"]
    picked = medaug.sample_slices(volume, 20)
    indices = [im["slice_index"] for im in picked]
    assert len(picked) == 20
    assert {0, 9, 14, 23} <= set(indices)
    assert indices == sorted(indices)
    assert medaug.sample_slices(picked, 20) == picked
    assert medaug.even_spacing(5, 3) == [0, 2, 4]


def test_index_build_retrieve_roundtrip(tmp_path):
    docs = read_jsonl(FIXTURES / "e2e" / "guidelines.jsonl")
    docs += [
        {"doc_id": f"case-{i}/img", "kind": "image_case", "text": f"finding number {i}",
         "source_case": f"case-{i}"}
        for i in range(6)
    ]
    index = medaug.Index.build(docs, dim=32)
    assert len(index) == len(docs) and index.dim == 32 and index.rejects == []
    hits = index.retrieve(text="finding number 3", k=4)
    assert len(hits) == 4
    assert any(h["kind"] == "text_guideline" for h in hits)
    assert hits[0]["doc_id"] == "case-3/img"
    excluded = index.retrieve(text="finding number 3", k=4, case_id="case-3")
    assert all(h["doc_id"] != "case-3/img" for h in excluded)

    path = tmp_path / "index.bin"
    index.save(path)
    again = medaug.Index.load(path)
    assert again.retrieve(text="finding number 3", k=4) == hits


def test_accuracy_and_letters():
    preds = [r["output"] for r in read_jsonl(FIXTURES / "metrics" / "mcq_preds.jsonl")]
    gold = [r["gold"] for r in read_jsonl(FIXTURES / "metrics" / "mcq_gold.jsonl")]
    report = medaug.accuracy(preds, gold)
    assert report["accuracy_3dp"] == "0.667"
    assert medaug.extract_letter("I am not sure.") is None
    for row in read_jsonl(FIXTURES / "metrics" / "letters.jsonl"):
        assert medaug.extract_letter(row["output"]) == row["key"], row["id"]


def test_umls():
    lex = medaug.Lexicon.from_jsonl(str(FIXTURES / "metrics" / "lexicon.jsonl"))
    assert len(lex) == 11
    found = lex.extract("Right lower lobe consolidation with air bronchograms.")
    assert found == {"C0225758", "C0521530", "C0239027"}
    p, r, f1 = medaug.umls_prf({"a", "b"}, {"b", "c", "d"})
    assert (p, r) == (pytest.approx(1 / 3), 0.5)
    assert f1 == pytest.approx(2 * 1 / 5)


def test_distribution_and_judge_helpers():
    report = medaug.distribution(["CT", "CT", "MR"])
    assert report["total"] == 3
    assert report_percent(report, "CT") == "66.67"
    assert medaug.round_half_up(200 / 3, 2) == 66.67
    assert medaug.overall(1.28, 1.32, 1.27) == pytest.approx(1.29)
    assert medaug.parse_score("{3.0}") == 3.0
    assert medaug.parse_score("6.0") == 6.0
    assert medaug.parse_score("n/a") is None


def report_percent(report, label):
    for row in report["modalities"]:
        if row["modality"] == label:
            return row["percent"]
    raise KeyError(label)


def test_errors_carry_exit_codes(tmp_path):
    with pytest.raises(medaug.Error) as info:
        medaug.extract_letter("A", 1)
    assert info.value.exit_code == 1
    with pytest.raises(medaug.Error) as info:
        medaug.ingest(tmp_path / "missing.jsonl")
    assert info.value.exit_code == 2
    dup = [{"image_id": n, "uri": n, "volume_id": "v", "slice_index": 1} for n in "ab"]
    with pytest.raises(medaug.Error, match="duplicate slice_index"):
        medaug.sample_slices(dup)


def test_malformed_lines_become_rejects(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id":\n')
    records, rejects = medaug.ingest(bad)
    assert records == [] and rejects[0]["line"] == 1
