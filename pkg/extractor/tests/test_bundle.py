"""Bundle assembly and the cross-component contract (criterion A10)."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from connhs_extract import MockEncoder, RawDocument, build_bundle, load_raw_corpus
from connhs_extract.cli import main

from connhs.corpus import load_bundle

DATA = Path(__file__).parent / "data"


class TestBuildBundle:
    def test_validates_through_primary_loader(self, tmp_path):
        docs = load_raw_corpus(DATA / "golden_raw.jsonl")
        out = tmp_path / "bundle.jsonl"
        build_bundle(docs, MockEncoder(dim=12), out, k=5)
        corpus = load_bundle(out)
        assert len(corpus) == 5
        assert corpus.dim == 12
        assert corpus.ids == ("r0", "r1", "r2", "r3", "r4")
        assert corpus.class_set == {"sports", "tech", "finance", "health"}

    def test_empty_feature_lists_are_schema_valid(self, tmp_path):
        docs = [RawDocument(id="bare", text="plain words without events", label=None, split="train")]
        out = tmp_path / "bundle.jsonl"
        build_bundle(docs, MockEncoder(dim=6), out, k=3)
        corpus = load_bundle(out)
        assert corpus.docs[0].event_vecs == ()
        assert len(corpus.docs[0].keyword_vecs) == 3

    def test_record_order_follows_input(self, tmp_path):
        docs = load_raw_corpus(DATA / "golden_raw.jsonl")[::-1]
        out = tmp_path / "bundle.jsonl"
        build_bundle(docs, MockEncoder(dim=6), out)
        assert load_bundle(out).ids == ("r4", "r3", "r2", "r1", "r0")

    def test_encoder_failure_names_document(self, tmp_path):
        class Broken:
            name = "broken"
            dim = 4

            def encode(self, text):
                if "panic" in text:
                    raise RuntimeError("boom")
                return np.ones(4)

        docs = load_raw_corpus(DATA / "golden_raw.jsonl")
        with pytest.raises(RuntimeError, match="r2"):
            build_bundle(docs, Broken(), tmp_path / "bundle.jsonl")

    def test_mock_encoder_run_to_run_determinism(self, tmp_path):
        docs = load_raw_corpus(DATA / "golden_raw.jsonl")
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        build_bundle(docs, MockEncoder(dim=8), p1)
        build_bundle(docs, MockEncoder(dim=8), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_golden_bundle_bytes(self, tmp_path):
        # frozen output: generated once by the CLI, reviewed, checked in
        docs = load_raw_corpus(DATA / "golden_raw.jsonl")
        out = tmp_path / "bundle.jsonl"
        build_bundle(docs, MockEncoder(dim=8), out, k=10)
        assert out.read_bytes() == (DATA / "golden_bundle.jsonl").read_bytes()

    def test_golden_bundle_loads(self):
        corpus = load_bundle(DATA / "golden_bundle.jsonl")
        assert corpus.dim == 8
        assert [len(d.event_vecs) for d in corpus.docs] == [1, 1, 0, 1, 2]
        assert [len(d.keyword_vecs) for d in corpus.docs] == [6, 6, 5, 7, 7]


class TestCli:
    def test_end_to_end(self, tmp_path, capsys):
        out = tmp_path / "bundle.jsonl"
        rc = main(["--in", str(DATA / "golden_raw.jsonl"), "--out", str(out), "--encoder", "mock", "--keywords", "10"])
        assert rc == 0
        assert "wrote 5 records" in capsys.readouterr().out
        assert load_bundle(out).dim == 32

    def test_bad_input_exits_2(self, tmp_path):
        rc = main(["--in", str(tmp_path / "missing.jsonl"), "--out", str(tmp_path / "o.jsonl")])
        assert rc == 2

    def test_unknown_encoder_exits_2(self, tmp_path):
        rc = main(["--in", str(DATA / "golden_raw.jsonl"), "--out", str(tmp_path / "o.jsonl"), "--encoder", "nope"])
        assert rc == 2

    def test_custom_plugin_loading(self, tmp_path, monkeypatch):
        plugin = tmp_path / "myenc.py"
        plugin.write_text(
            "import numpy as np\n"
            "class Enc:\n"
            "    name = 'const'\n"
            "    dim = 3\n"
            "    def encode(self, text):\n"
            "        return np.ones(3) / np.sqrt(3.0)\n"
            "encoder = Enc()\n",
            encoding="utf-8",
        )
        monkeypatch.syspath_prepend(str(tmp_path))
        out = tmp_path / "o.jsonl"
        rc = main(["--in", str(DATA / "golden_raw.jsonl"), "--out", str(out), "--encoder", "myenc:encoder"])
        assert rc == 0
        assert load_bundle(out).dim == 3
