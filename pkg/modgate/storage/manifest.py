"""Run manifest: what fit-experts produced and how well each expert fits."""

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import yaml

from modgate.exceptions import PersistenceError, error_context
from modgate.storage.textio import atomic_writer

logger = logging.getLogger(__name__)

MANIFEST_FILENAME = "manifest.yaml"


@dataclass
class ExpertEntry:
    """One fitted expert and its measured error against its source."""

    name: str
    domain: str
    file: str
    epsilon: float
    num_samples: int


@dataclass
class RunManifest:
    vocab_size: int
    length: int
    alpha: float
    seed: int
    experts: list[ExpertEntry] = field(default_factory=list)
    version: int = 1

    @property
    def epsilons(self) -> list[float]:
        return [e.epsilon for e in self.experts]


def save_manifest(manifest: RunManifest, run_dir: Path) -> Path:
    """Write ``manifest.yaml`` into the run directory."""
    path = Path(run_dir) / MANIFEST_FILENAME
    with atomic_writer(path) as f:
        yaml.safe_dump(
            asdict(manifest),
            f,
            default_flow_style=False,
            sort_keys=False,
            allow_unicode=True,
            indent=2,
        )
    logger.info("Saved run manifest to: %s", path)
    return path


def load_manifest(run_dir: Path) -> RunManifest:
    path = Path(run_dir) / MANIFEST_FILENAME
    if not path.exists():
        raise PersistenceError(
            "no manifest found; run fit-experts first", path=str(path)
        )
    with error_context(
        "load manifest",
        transform={OSError: PersistenceError, yaml.YAMLError: PersistenceError},
        details={"path": str(path)},
    ):
        with path.open("r", encoding="utf-8") as f:
            raw: dict[str, Any] = yaml.safe_load(f) or {}
    with error_context(
        "parse manifest",
        transform={TypeError: PersistenceError, KeyError: PersistenceError},
        details={"path": str(path)},
    ):
        entries = [ExpertEntry(**e) for e in raw.pop("experts", [])]
        return RunManifest(experts=entries, **raw)
