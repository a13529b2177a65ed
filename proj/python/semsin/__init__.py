"""Event causality identification over AMR semantic structures."""

try:
    from ._semsin import (
        SemsinError,
        f1_from_pr,
        focal_loss,
        isomorphic,
        roundtrip_penman,
        run_cli,
        shortest_paths,
        synthetic,
    )
except ImportError:  # in-tree build: extension on sys.path
    from _semsin import (
        SemsinError,
        f1_from_pr,
        focal_loss,
        isomorphic,
        roundtrip_penman,
        run_cli,
        shortest_paths,
        synthetic,
    )

__all__ = [
    "SemsinError",
    "f1_from_pr",
    "focal_loss",
    "isomorphic",
    "roundtrip_penman",
    "run_cli",
    "shortest_paths",
    "synthetic",
]
