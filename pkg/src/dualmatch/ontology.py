"""Canonical in-memory form of ontologies, ground-truth alignments, and matching tasks.

Input is a small JSON schema (documented in the README) carrying the five class
attributes the matcher consumes: name, label, comment, hierarchy links, and
property names. Converting RDF/OWL into this schema is an offline concern.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .textutil import tokenize


class OntologyParseError(ValueError):
    """Raised for malformed ontology or alignment documents."""


@dataclass(frozen=True)
class ClassRecord:
    """One ontology class with the attributes used by keys and labeling functions."""

    iri: str
    name: str
    label: str = ""
    comment: str = ""
    superclasses: frozenset[str] = frozenset()
    subclasses: frozenset[str] = frozenset()
    properties: frozenset[str] = frozenset()

    def name_tokens(self) -> tuple[str, ...]:
        return tokenize(self.name)

    def label_tokens(self) -> tuple[str, ...]:
        return tokenize(self.label)


class OntologySchema:
    """An ontology's classes, iterated in deterministic (iri-sorted) order."""

    def __init__(self, id: str, classes: Iterable[ClassRecord], warnings: Iterable[str] = ()):
        self.id = id
        self._by_iri = {c.iri: c for c in sorted(classes, key=lambda c: c.iri)}
        self.warnings = tuple(warnings)
        if not self._by_iri:
            raise OntologyParseError(f"ontology {id!r} has no classes")

    def __len__(self) -> int:
        return len(self._by_iri)

    def __iter__(self) -> Iterator[ClassRecord]:
        return iter(self._by_iri.values())

    def __contains__(self, iri: str) -> bool:
        return iri in self._by_iri

    def get(self, iri: str) -> ClassRecord:
        return self._by_iri[iri]

    @property
    def iris(self) -> list[str]:
        return list(self._by_iri)


@dataclass
class GroundTruth:
    """The positive class: source-iri/target-iri equivalences."""

    pairs: frozenset[tuple[str, str]]
    duplicates: int = 0
    rejected: tuple[dict, ...] = ()

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, pair: tuple[str, str]) -> bool:
        return pair in self.pairs


@dataclass
class MatchTask:
    source: OntologySchema
    target: OntologySchema
    truth: GroundTruth | None = None

    def __post_init__(self) -> None:
        if self.source.id == self.target.id:
            raise ValueError("source and target ontologies must have distinct ids")


def parse_ontology(doc: dict) -> OntologySchema:
    """Parse an ontology document into a schema.

    Dangling hierarchy references (iris not defined in the document) are
    dropped; each drop is recorded in ``schema.warnings``.
    """
    if not isinstance(doc, dict):
        raise OntologyParseError("ontology document must be a JSON object")
    onto_id = doc.get("id")
    if not isinstance(onto_id, str) or not onto_id:
        raise OntologyParseError("ontology document missing non-empty 'id'")
    raw_classes = doc.get("classes")
    if not isinstance(raw_classes, list) or not raw_classes:
        raise OntologyParseError(f"ontology {onto_id!r}: 'classes' must be a non-empty list")

    seen: dict[str, int] = {}
    parsed: list[dict] = []
    for idx, entry in enumerate(raw_classes):
        if not isinstance(entry, dict):
            raise OntologyParseError(f"ontology {onto_id!r}: classes[{idx}] is not an object")
        iri = entry.get("iri")
        if not isinstance(iri, str) or not iri:
            raise OntologyParseError(f"ontology {onto_id!r}: classes[{idx}] missing non-empty 'iri'")
        if iri in seen:
            raise OntologyParseError(
                f"ontology {onto_id!r}: duplicate iri {iri!r} (classes[{seen[iri]}] and classes[{idx}])"
            )
        seen[iri] = idx
        name = entry.get("name")
        if not isinstance(name, str) or not name:
            raise OntologyParseError(f"ontology {onto_id!r}: classes[{idx}] ({iri}) missing non-empty 'name'")
        for opt in ("label", "comment"):
            value = entry.get(opt, "")
            if not isinstance(value, str):
                raise OntologyParseError(f"ontology {onto_id!r}: classes[{idx}].{opt} must be a string")
        for opt in ("superclasses", "subclasses", "properties"):
            value = entry.get(opt, [])
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                raise OntologyParseError(f"ontology {onto_id!r}: classes[{idx}].{opt} must be a list of strings")
        parsed.append(entry)

    warnings: list[str] = []
    records = []
    for entry in parsed:
        iri = entry["iri"]
        hierarchy: dict[str, frozenset[str]] = {}
        for kind in ("superclasses", "subclasses"):
            kept = []
            for ref in entry.get(kind, []):
                if ref in seen:
                    kept.append(ref)
                else:
                    warnings.append(f"{iri}: dangling {kind[:-2]} reference {ref!r} dropped")
            hierarchy[kind] = frozenset(kept)
        records.append(
            ClassRecord(
                iri=iri,
                name=entry["name"],
                label=entry.get("label", ""),
                comment=entry.get("comment", ""),
                superclasses=hierarchy["superclasses"],
                subclasses=hierarchy["subclasses"],
                properties=frozenset(entry.get("properties", [])),
            )
        )
    return OntologySchema(onto_id, records, warnings)


def schema_to_doc(schema: OntologySchema) -> dict:
    """Serialize a schema back to the canonical document form."""
    return {
        "id": schema.id,
        "classes": [
            {
                "iri": c.iri,
                "name": c.name,
                "label": c.label,
                "comment": c.comment,
                "superclasses": sorted(c.superclasses),
                "subclasses": sorted(c.subclasses),
                "properties": sorted(c.properties),
            }
            for c in schema
        ],
    }


def load_alignment(doc: dict, task: MatchTask) -> GroundTruth:
    """Load ground-truth equivalences, keeping only pairs that resolve in the task.

    Unresolvable pairs are returned in ``rejected`` (with the reason), never
    silently dropped; duplicates are counted.
    """
    if not isinstance(doc, dict) or not isinstance(doc.get("matches", []), list):
        raise OntologyParseError("alignment document must be an object with a 'matches' list")
    pairs: set[tuple[str, str]] = set()
    duplicates = 0
    rejected: list[dict] = []
    for idx, entry in enumerate(doc.get("matches", [])):
        if not isinstance(entry, dict) or "source" not in entry or "target" not in entry:
            raise OntologyParseError(f"alignment matches[{idx}] must have 'source' and 'target'")
        src, tgt = entry["source"], entry["target"]
        missing = []
        if src not in task.source:
            missing.append(f"source iri {src!r} not in ontology {task.source.id!r}")
        if tgt not in task.target:
            missing.append(f"target iri {tgt!r} not in ontology {task.target.id!r}")
        if missing:
            rejected.append({"source": src, "target": tgt, "reason": "; ".join(missing)})
            continue
        if (src, tgt) in pairs:
            duplicates += 1
            continue
        pairs.add((src, tgt))
    return GroundTruth(pairs=frozenset(pairs), duplicates=duplicates, rejected=tuple(rejected))


def candidate_universe(task: MatchTask) -> int:
    """Size of the full cross product of source and target classes."""
    return len(task.source) * len(task.target)


def load_task_dir(path: str | Path) -> MatchTask:
    """Load a task directory: source.json, target.json, optional alignment.json."""
    path = Path(path)
    source = parse_ontology(json.loads((path / "source.json").read_text()))
    target = parse_ontology(json.loads((path / "target.json").read_text()))
    task = MatchTask(source=source, target=target)
    alignment_file = path / "alignment.json"
    if alignment_file.exists():
        task.truth = load_alignment(json.loads(alignment_file.read_text()), task)
    return task


def save_task_dir(task: MatchTask, path: str | Path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    (path / "source.json").write_text(json.dumps(schema_to_doc(task.source), indent=1))
    (path / "target.json").write_text(json.dumps(schema_to_doc(task.target), indent=1))
    if task.truth is not None:
        doc = {"matches": [{"source": s, "target": t} for s, t in sorted(task.truth.pairs)]}
        (path / "alignment.json").write_text(json.dumps(doc, indent=1))
