"""Integration tests for the modgate command line."""

import math

import numpy as np
import pytest
from typer.testing import CliRunner

from modgate import __version__
from modgate.__main__ import app
from modgate.storage.manifest import load_manifest
from modgate.storage.textio import load_corpus, load_gate, read_csv

CONFIG = """\
vocab_size=3
length=4
domains=increment,decrement
iterations=500
checkpoint_every=50
num_samples=200
corpus_size=2000
router_steps=4000
"""


def _invoke(runner: CliRunner, *args: str):
    result = runner.invoke(app, list(args))
    assert result.exit_code == 0, result.output
    return result


def _table(path) -> dict[str, dict[float, float]]:
    """CSV columns keyed by the first column's value."""
    header, rows = read_csv(path)
    return {
        name: {float(row[0]): float(row[j]) for row in rows}
        for j, name in enumerate(header)
        if j
    }


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """A run directory taken through every subcommand once."""
    root = tmp_path_factory.mktemp("pipeline")
    config = root / "exp.cfg"
    config.write_text(CONFIG)
    out = root / "run"
    runner = CliRunner()
    for command in ("fit-experts", "solve", "sweep", "sample", "distill", "analyze"):
        _invoke(runner, command, "-c", str(config), "-o", str(out))
    return config, out


@pytest.mark.integration
class TestPipeline:
    """Tests for a full run on two clean counting domains."""

    def test_run_directory(self, pipeline):
        """Every subcommand leaves its files in the run directory."""
        _, out = pipeline
        for name in (
            "manifest.yaml",
            "expert_1.txt",
            "expert_2.txt",
            "gate.txt",
            "trace.csv",
            "bounds.csv",
            "sweep.csv",
            "corpus.txt",
            "cache.txt",
            "router.txt",
            "distill.csv",
            "analysis.csv",
            "modgate.log",
        ):
            assert (out / name).exists(), name

    def test_exact_experts(self, pipeline):
        """Population fits of clean domains have zero error."""
        _, out = pipeline
        manifest = load_manifest(out)
        assert [e.domain for e in manifest.experts] == ["increment", "decrement"]
        assert manifest.epsilons == pytest.approx([0.0, 0.0], abs=1e-12)

    def test_solved_gate_is_balanced(self, pipeline):
        """The exact solver returns a normalized gate near the 50/50 mixture."""
        _, out = pipeline
        gate = load_gate(out / "gate.txt")
        assert gate.W.shape == (6, 2)
        header, rows = read_csv(out / "trace.csv")
        assert header[:3] == ["iter", "lambda_1", "lambda_2"]
        assert len(rows) == 10
        assert float(rows[-1][header.index("gap")]) <= 0.05

    def test_sweep_values(self, pipeline):
        """Gate and baselines along the mixture match their closed forms."""
        _, out = pipeline
        sweep = _table(out / "sweep.csv")
        assert list(sweep["gate_nll"]) == pytest.approx([i / 10 for i in range(11)])
        assert sweep["gate_nll"][0.5] == pytest.approx(math.log(6), abs=0.02)
        assert sweep["fixed_large_nll"][0.5] == pytest.approx(math.log(3) + 3 * math.log(2))
        assert sweep["fixed_small_nll"][0.5] == pytest.approx(4 * math.log(3))
        assert sweep["oracle_nll"][0.0] == pytest.approx(sweep["expert_b_nll"][0.0])
        assert sweep["expert_a_nll"][0.5] == math.inf
        assert sweep["oracle_nll"][0.5] - sweep["gate_nll"][0.5] >= 1.0

    def test_corpus_stays_on_support(self, pipeline):
        """Sampled sequences are counting sequences of either rule."""
        _, out = pipeline
        tokens, V = load_corpus(out / "corpus.txt")
        assert V == 3
        assert tokens.shape == (200, 4)
        steps = np.mod(np.diff(tokens, axis=1), 3)
        assert np.all((steps == 1).all(axis=1) | (steps == 2).all(axis=1))

    def test_distillation(self, pipeline):
        """The causal router tracks the teacher; the Markov student cannot."""
        _, out = pipeline
        distill = _table(out / "distill.csv")
        teacher = distill["teacher_nll"][0.5]
        assert distill["causal_router_nll"][0.5] - teacher <= 0.1
        assert distill["monolithic_nll"][0.5] == pytest.approx(
            math.log(3) + 3 * math.log(2), abs=0.1
        )

    def test_analysis(self, pipeline):
        """The game value of two disjoint exact domains is ln 2."""
        _, out = pipeline
        header, rows = read_csv(out / "analysis.csv")
        assert header == ["quantity", "value"]
        values = {name: float(value) for name, value in rows}
        assert values["game_value"] == pytest.approx(math.log(2), abs=1e-6)
        assert values["lambda_star_1"] == pytest.approx(0.5, abs=0.02)
        assert values["lambda_star.capacity"] == pytest.approx(math.log(2), abs=1e-6)
        assert values["lambda_star.bound"] == pytest.approx(0.0, abs=1e-4)
        assert "gate.worst_case_risk" in values

    def test_sampling_is_reproducible(self, pipeline):
        """The same seed writes the same corpus bytes."""
        config, out = pipeline
        first = (out / "corpus.txt").read_bytes()
        _invoke(CliRunner(), "sample", "-c", str(config), "-o", str(out))
        assert (out / "corpus.txt").read_bytes() == first

    def test_sir_sampler(self, pipeline):
        """SIR also stays on the support of the gated model."""
        config, out = pipeline
        _invoke(CliRunner(), "sample", "-c", str(config), "-o", str(out), "--sampler", "sir")
        tokens, _ = load_corpus(out / "corpus.txt")
        steps = np.mod(np.diff(tokens, axis=1), 3)
        assert np.all((steps == 1).all(axis=1) | (steps == 2).all(axis=1))
        # restore the rejection corpus for the other tests
        _invoke(CliRunner(), "sample", "-c", str(config), "-o", str(out))


@pytest.mark.integration
class TestCliErrors:
    """Tests for exit codes of failing commands."""

    def test_version(self, cli_runner):
        """--version prints the package version."""
        result = cli_runner.invoke(app, ["--version"])
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_unknown_method(self, cli_runner, tmp_path, run_dir):
        """An unknown solver name is a usage error."""
        config = tmp_path / "exp.cfg"
        config.write_text(CONFIG)
        result = cli_runner.invoke(
            app, ["solve", "-c", str(config), "-o", str(run_dir), "--method", "bogus"]
        )
        assert result.exit_code == 1

    def test_missing_domains(self, cli_runner, tmp_path, run_dir):
        """fit-experts needs the domains key."""
        config = tmp_path / "exp.cfg"
        config.write_text("vocab_size=3\nlength=4\n")
        result = cli_runner.invoke(app, ["fit-experts", "-c", str(config), "-o", str(run_dir)])
        assert result.exit_code == 2
        assert "domains" in result.output

    def test_solve_before_fit(self, cli_runner, tmp_path, run_dir):
        """Solving an empty run directory points at fit-experts."""
        config = tmp_path / "exp.cfg"
        config.write_text(CONFIG)
        result = cli_runner.invoke(app, ["solve", "-c", str(config), "-o", str(run_dir)])
        assert result.exit_code == 2

    def test_sweep_before_solve(self, cli_runner, tmp_path, run_dir):
        """Sweeping needs a solved gate."""
        config = tmp_path / "exp.cfg"
        config.write_text(CONFIG)
        assert cli_runner.invoke(
            app, ["fit-experts", "-c", str(config), "-o", str(run_dir)]
        ).exit_code == 0
        result = cli_runner.invoke(app, ["sweep", "-c", str(config), "-o", str(run_dir)])
        assert result.exit_code == 2

    def test_unknown_config_key(self, cli_runner, tmp_path, run_dir):
        """Unknown keys stop the command before anything runs."""
        config = tmp_path / "exp.cfg"
        config.write_text("vocab_size=3\nwidth=2\n")
        result = cli_runner.invoke(app, ["fit-experts", "-c", str(config), "-o", str(run_dir)])
        assert result.exit_code == 2
        assert not (run_dir / "manifest.yaml").exists()

    def test_keys_lists_schema(self, cli_runner):
        """The keys command prints every documented key."""
        result = cli_runner.invoke(app, ["keys"])
        assert result.exit_code == 0
        assert "lambda_step" in result.output
