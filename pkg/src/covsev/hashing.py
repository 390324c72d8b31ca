"""Content hashing for configs, used to stamp caches, checkpoints and reports."""

import hashlib
import json


def config_hash(config: dict) -> str:
    """Return a short stable hash of a JSON-serializable config mapping.

    Key order does not matter; nested dicts/lists are hashed canonically.
    """
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
