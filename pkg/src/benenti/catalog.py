"""Built-in metric pairs: positive examples across signatures plus negative
controls.

Each entry is shipped as a pair file under ``benenti/pairs/`` and loaded
through the same reader the CLI uses for user files, so both paths exercise
identical data.  ``expected_equivalent`` records whether the pair should pass
the structural checks; the negative controls exist to prove the checkers are
not vacuous.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from .errors import UnknownEntryError
from .pairfile import parse_pair
from .projective import ProjectivePair

_REGISTRY = {
    "trivial": {
        "expected_equivalent": True,
        "signature": "riemannian / riemannian",
    },
    "trivial3": {
        "expected_equivalent": True,
        "signature": "riemannian / riemannian",
    },
    "scaled": {
        "expected_equivalent": True,
        "signature": "riemannian / riemannian",
    },
    "dini": {
        "expected_equivalent": True,
        "signature": "riemannian / riemannian",
    },
    "beltrami": {
        "expected_equivalent": True,
        "signature": "riemannian / riemannian",
    },
    "lorentz_dini": {
        "expected_equivalent": True,
        "signature": "riemannian / lorentzian",
    },
    "control_nonequiv": {
        "expected_equivalent": False,
        "signature": "riemannian / riemannian",
    },
    "control_nonequiv_curved": {
        "expected_equivalent": False,
        "signature": "riemannian / riemannian",
    },
}


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    pair: ProjectivePair
    expected_equivalent: bool
    signature: str
    notes: str


_cache: dict[str, CatalogEntry] = {}


def list_entries() -> tuple[str, ...]:
    """Names of all built-in pairs, in catalog order."""
    return tuple(_REGISTRY)


def get_entry(name: str) -> CatalogEntry:
    """Load a built-in pair by name; raises UnknownEntryError otherwise."""
    if name not in _REGISTRY:
        raise UnknownEntryError(name, list(_REGISTRY))
    if name not in _cache:
        meta = _REGISTRY[name]
        text = (
            resources.files("benenti").joinpath(f"pairs/{name}.yaml").read_text()
        )
        pair = parse_pair(text, label=f"catalog:{name}")
        _cache[name] = CatalogEntry(
            name=name,
            pair=pair,
            expected_equivalent=meta["expected_equivalent"],
            signature=meta["signature"],
            notes=pair.notes or "",
        )
    return _cache[name]


def equivalent_entries() -> tuple[str, ...]:
    return tuple(n for n, m in _REGISTRY.items() if m["expected_equivalent"])


def control_entries() -> tuple[str, ...]:
    return tuple(n for n, m in _REGISTRY.items() if not m["expected_equivalent"])
