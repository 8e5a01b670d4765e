"""Unit tests for the plain-text file formats and the run manifest."""

import numpy as np
import pytest

from modgate.distill.routers import CausalRouter
from modgate.distill.structural import cache_sequences
from modgate.exceptions import ModgateError, PersistenceError
from modgate.gates.featurized import FeatGate
from modgate.gates.tabular import TabularGate
from modgate.storage.manifest import ExpertEntry, RunManifest, load_manifest, save_manifest
from modgate.storage.textio import (
    atomic_writer,
    load_cache,
    load_corpus,
    load_expert,
    load_gate,
    load_router,
    read_csv,
    save_cache,
    save_corpus,
    save_expert,
    save_gate,
    save_router,
    write_csv,
)


@pytest.mark.unit
class TestModelFiles:
    """Tests for expert, gate and router files."""

    def test_expert_is_reproduced_exactly(self, identical_experts, tmp_path):
        """Smoothed tables survive a save/load cycle bit for bit."""
        expert = identical_experts.experts[0]
        path = save_expert(expert, tmp_path / "expert_0.txt")
        assert path.read_text().startswith("modgate-expert v1 2 2 ")
        loaded = load_expert(path)
        assert np.array_equal(loaded.start, expert.start)
        assert np.array_equal(loaded.trans, expert.trans)
        assert loaded.alpha == expert.alpha

    def test_tabular_gate(self, disjoint_short, tmp_path):
        """Tabular gates keep their support order and weights."""
        W = np.random.default_rng(0).dirichlet([1.0, 1.0], size=6)
        gate = TabularGate(disjoint_short.support, W)
        loaded = load_gate(save_gate(gate, tmp_path / "gate.txt"))
        assert isinstance(loaded, TabularGate)
        assert np.array_equal(loaded.support.tokens, disjoint_short.support.tokens)
        assert np.array_equal(loaded.W, gate.W)

    def test_featurized_gate(self, tmp_path):
        """Featurized gates store Θ and recover V from its height."""
        theta = np.random.default_rng(1).normal(size=(7, 2))
        loaded = load_gate(save_gate(FeatGate(3, theta), tmp_path / "gate.txt"))
        assert isinstance(loaded, FeatGate)
        assert loaded.vocab_size == 3
        assert np.array_equal(loaded.theta, theta)

    def test_router(self, tmp_path):
        """Routers store Φ under a header naming V, T and p."""
        phi = np.random.default_rng(2).normal(size=(8, 2))
        loaded = load_router(save_router(CausalRouter(3, 4, phi), tmp_path / "router.txt"))
        assert (loaded.vocab_size, loaded.length, loaded.num_experts) == (3, 4, 2)
        assert np.array_equal(loaded.phi, phi)

    def test_unknown_gate_header(self, tmp_path):
        """A gate file must name one of the two gate formats."""
        path = tmp_path / "gate.txt"
        path.write_text("modgate-gate-other v1 1 2\n")
        with pytest.raises(PersistenceError):
            load_gate(path)


@pytest.mark.unit
class TestDataFiles:
    """Tests for corpora and cached datasets."""

    def test_corpus(self, disjoint_long, tmp_path):
        """Corpora are one sequence per line after a comment header."""
        path = save_corpus(disjoint_long.support.tokens, 3, tmp_path / "corpus.txt")
        lines = path.read_text().splitlines()
        assert lines[0] == "# modgate-corpus v1 3 4 6"
        assert lines[1] == " ".join(str(t) for t in disjoint_long.support.tokens[0])
        tokens, V = load_corpus(path)
        assert V == 3
        assert np.array_equal(tokens, disjoint_long.support.tokens)

    def test_cache(self, disjoint_long, tmp_path):
        """Cached tuples keep prefix, target and probabilities, including empty prefixes."""
        dataset = cache_sequences(disjoint_long.support.tokens[:2], disjoint_long.experts)
        loaded, V, T = load_cache(save_cache(dataset, 3, 4, tmp_path / "cache.txt"))
        assert (V, T) == (3, 4)
        assert [c.prefix for c in loaded] == [c.prefix for c in dataset]
        assert [c.target for c in loaded] == [c.target for c in dataset]
        assert all(np.array_equal(a.probs, b.probs) for a, b in zip(loaded, dataset, strict=True))

    def test_corpus_row_count_checked(self, tmp_path):
        """A truncated corpus is reported instead of silently accepted."""
        path = tmp_path / "corpus.txt"
        path.write_text("# modgate-corpus v1 3 2 2\n0 1\n")
        with pytest.raises(PersistenceError):
            load_corpus(path)


@pytest.mark.unit
class TestReadFailures:
    """Tests for malformed and missing files."""

    def test_missing_file(self, tmp_path):
        """A missing file is a persistence error naming the path."""
        with pytest.raises(PersistenceError) as exc_info:
            load_expert(tmp_path / "nope.txt")
        assert exc_info.value.path == str(tmp_path / "nope.txt")

    def test_empty_file(self, tmp_path):
        """An empty file has no header."""
        path = tmp_path / "expert.txt"
        path.write_text("")
        with pytest.raises(PersistenceError):
            load_expert(path)

    def test_bad_version(self, tmp_path):
        """Headers with another version are rejected."""
        path = tmp_path / "expert.txt"
        path.write_text("modgate-expert v2 2 2 0\n0.5 0.5\n1 0\n0 1\n")
        with pytest.raises(PersistenceError):
            load_expert(path)

    def test_bad_body(self, tmp_path):
        """Missing table rows are a parse failure."""
        path = tmp_path / "expert.txt"
        path.write_text("modgate-expert v1 2 2 0\n0.5 0.5\n1 0\n")
        with pytest.raises(PersistenceError):
            load_expert(path)

    def test_failed_write_leaves_nothing(self, tmp_path):
        """An interrupted write removes its temporary file and keeps the target absent."""
        path = tmp_path / "out.txt"
        with pytest.raises(ModgateError), atomic_writer(path) as f:
            f.write("partial")
            raise RuntimeError("boom")
        assert not path.exists()
        assert list(tmp_path.iterdir()) == []


@pytest.mark.unit
class TestCsv:
    """Tests for CSV tables."""

    def test_provenance_and_infinities(self, tmp_path):
        """Provenance is a comment line and infinities are spelled out."""
        path = write_csv(
            tmp_path / "bounds.csv",
            ["name", "value", "other"],
            [["capacity", float("inf"), 0.5], ["gap", float("-inf"), 1]],
            provenance="modgate 0.1.0 seed=0",
        )
        text = path.read_text()
        assert text.startswith("# provenance: modgate 0.1.0 seed=0\n")
        header, rows = read_csv(path)
        assert header == ["name", "value", "other"]
        assert rows == [["capacity", "inf", "0.5"], ["gap", "-inf", "1"]]

    def test_full_precision(self, tmp_path):
        """Floats are written with 17 significant digits."""
        path = write_csv(tmp_path / "t.csv", ["x"], [[1 / 3]])
        _, rows = read_csv(path)
        assert float(rows[0][0]) == 1 / 3


@pytest.mark.unit
class TestManifest:
    """Tests for the run manifest."""

    def _manifest(self) -> RunManifest:
        return RunManifest(
            vocab_size=3,
            length=4,
            alpha=0.1,
            seed=7,
            experts=[
                ExpertEntry("expert_0", "increment", "expert_0.txt", 0.0, 0),
                ExpertEntry("expert_1", "decrement:0.1", "expert_1.txt", 0.25, 200),
            ],
        )

    def test_save_and_load(self, tmp_path):
        """The manifest is YAML in the run directory."""
        path = save_manifest(self._manifest(), tmp_path)
        assert path.name == "manifest.yaml"
        loaded = load_manifest(tmp_path)
        assert loaded == self._manifest()
        assert loaded.epsilons == [0.0, 0.25]

    def test_missing_manifest(self, tmp_path):
        """Commands that need fitted experts point at fit-experts."""
        with pytest.raises(PersistenceError, match="fit-experts"):
            load_manifest(tmp_path)

    def test_unknown_field(self, tmp_path):
        """Unexpected manifest fields are a persistence error."""
        (tmp_path / "manifest.yaml").write_text("vocab_size: 3\nlength: 2\nalpha: 0\nseed: 0\ncolour: red\n")
        with pytest.raises(PersistenceError):
            load_manifest(tmp_path)
