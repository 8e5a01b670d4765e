"""Persistence of experts, gates, routers, datasets, corpora and reports."""

from modgate.storage.manifest import (
    MANIFEST_FILENAME,
    ExpertEntry,
    RunManifest,
    load_manifest,
    save_manifest,
)
from modgate.storage.textio import (
    atomic_writer,
    fmt,
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

__all__ = [
    "MANIFEST_FILENAME",
    "ExpertEntry",
    "RunManifest",
    "atomic_writer",
    "fmt",
    "load_cache",
    "load_corpus",
    "load_expert",
    "load_gate",
    "load_manifest",
    "load_router",
    "read_csv",
    "save_cache",
    "save_corpus",
    "save_expert",
    "save_gate",
    "save_manifest",
    "save_router",
    "write_csv",
]
