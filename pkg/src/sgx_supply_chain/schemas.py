# SGX Supply Chain Toolkit
# File: schemas.py
# Version: v1

"""JSON Schemas for every document the toolkit ingests.

All inputs are validated here before any domain object is built, so a
malformed document always surfaces as :class:`DocumentError` naming the JSON
path of the offending field (``packages/3/status``) instead of a ``KeyError``
deep inside an algorithm.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

from jsonschema import Draft202012Validator

from .errors import DocumentError
from .models import PackageStatus, ResourceKind

__all__ = [
    "REGISTRY_SNAPSHOT",
    "MANIFEST_ENTRY",
    "PLAN_REQUEST",
    "FACTS_DOCUMENT",
    "PATTERN_TABLE",
    "SVN_EVENT",
    "PATCH",
    "FILE_TREE",
    "CI_SCRIPT",
    "NAME_LIST",
    "validate",
    "load_json",
    "load_jsonl",
    "parse_jsonl",
]

_NAME = {"type": "string", "minLength": 1}
_KINDS = [k.value for k in ResourceKind]

REGISTRY_SNAPSHOT: Dict[str, Any] = {
    "type": "object",
    "required": ["packages"],
    "properties": {
        "packages": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "version", "deps", "status"],
                "properties": {
                    "name": _NAME,
                    "version": {"type": "string"},
                    "deps": {"type": "array", "items": _NAME, "uniqueItems": True},
                    "status": {"enum": [s.value for s in PackageStatus]},
                    "is_meta": {"type": "boolean"},
                    "category": {"type": "string"},
                    "security_critical": {"type": "boolean"},
                },
            },
        }
    },
}

MANIFEST_ENTRY: Dict[str, Any] = {
    "type": "object",
    "required": ["id", "manifest_text"],
    "properties": {
        "id": _NAME,
        "manifest_text": {"type": "string"},
        "has_description": {"type": "boolean"},
        "has_docs": {"type": "boolean"},
        "active_commits": {"type": "boolean"},
        "is_educational": {"type": "boolean"},
    },
}

_USAGE = {
    "type": "object",
    "required": ["function", "kind", "security_sensitive"],
    "properties": {
        "function": _NAME,
        "kind": {"enum": _KINDS},
        "security_sensitive": {"type": "boolean"},
    },
}

PLAN_REQUEST: Dict[str, Any] = {
    "type": "object",
    "properties": {
        "root": _NAME,
        "usages": {"type": "array", "items": _USAGE},
        "tests": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "depends_on_pruned"],
                "properties": {"name": _NAME, "depends_on_pruned": {"type": "boolean"}},
            },
        },
        "features": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["flag", "sgx_relevant"],
                "properties": {"flag": _NAME, "sgx_relevant": {"type": "boolean"}},
            },
        },
        "strip": {"type": "array", "items": _NAME},
    },
}

FACTS_DOCUMENT: Dict[str, Any] = {
    "type": "object",
    "required": ["functions"],
    "properties": {
        "functions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name"],
                "properties": {
                    "name": _NAME,
                    "is_entrypoint": {"type": "boolean"},
                    "calls": {"type": "array", "items": _NAME},
                    "resources": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["kind"],
                            "properties": {"kind": {"enum": _KINDS}, "site": {"type": "string"}},
                        },
                    },
                },
            },
        }
    },
}

PATTERN_TABLE: Dict[str, Any] = {
    "type": "object",
    "minProperties": 1,
    "propertyNames": {"minLength": 1},
    "additionalProperties": {"enum": _KINDS},
}

SVN_EVENT: Dict[str, Any] = {
    "type": "object",
    "required": ["type"],
    "oneOf": [
        {
            "properties": {
                "type": {"const": "lib_release"},
                "library": _NAME,
                "security_bump": {"type": "boolean"},
            },
            "required": ["type", "library"],
        },
        {"properties": {"type": {"const": "sdk_bump"}}},
        {
            "properties": {
                "type": {"const": "retire"},
                "library": _NAME,
                "lib_rev": {"type": "integer", "minimum": 0},
            },
            "required": ["type", "library", "lib_rev"],
        },
    ],
}

PATCH: Dict[str, Any] = {
    "type": "object",
    "required": ["id", "library", "message", "timestamp"],
    "properties": {
        "id": _NAME,
        "library": _NAME,
        "message": {"type": "string"},
        "timestamp": {"type": "integer", "minimum": 0},
        "upstream_commit": {"type": ["string", "null"]},
    },
}

FILE_TREE: Dict[str, Any] = {
    "type": "object",
    "required": ["files"],
    "properties": {
        "files": {
            "type": "object",
            "additionalProperties": {"type": "array", "items": {"type": "string"}},
        }
    },
}

# Ranked package lists, histogram roots.
NAME_LIST: Dict[str, Any] = {"type": "array", "items": _NAME}

# Scripted CI runner: {"<library>": {"<config label or *>": ["pass", "fail:network", ...]}}
CI_SCRIPT: Dict[str, Any] = {
    "type": "object",
    "additionalProperties": {
        "type": "object",
        "additionalProperties": {
            "type": "array",
            "items": {"type": "string", "pattern": "^(pass|fail(:[a-z_]+)?)$"},
        },
    },
}


def _path_of(error: Any) -> str:
    parts = [str(p) for p in error.absolute_path]
    return "/".join(parts) if parts else "<root>"


def validate(document: Any, schema: Dict[str, Any], *, source: Optional[str] = None) -> Any:
    """Validate ``document`` against ``schema`` and return it unchanged.

    Raises :class:`DocumentError` for the first error in path order.
    """
    validator = Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(document), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        first = errors[0]
        field = _path_of(first)
        raise DocumentError(f"{field}: {first.message}", field=field, source=source)
    return document


def load_json(path: Path | str, schema: Optional[Dict[str, Any]] = None) -> Any:
    """Read a JSON document from disk, optionally schema-validating it."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read {p}: {exc.strerror or exc}", source=str(p)) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{p}: invalid JSON at line {exc.lineno}: {exc.msg}", source=str(p)) from exc
    if schema is not None:
        validate(doc, schema, source=str(p))
    return doc


def parse_jsonl(lines: Iterable[str], schema: Optional[Dict[str, Any]] = None, *, source: Optional[str] = None) -> List[Any]:
    """Parse JSON Lines text; blank lines are skipped."""
    out: List[Any] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DocumentError(f"line {lineno}: invalid JSON: {exc.msg}", field=f"line {lineno}", source=source) from exc
        if schema is not None:
            try:
                validate(doc, schema, source=source)
            except DocumentError as exc:
                field = f"line {lineno}/{exc.field}"
                raise DocumentError(f"line {lineno}: {exc.message}", field=field, source=source) from exc
        out.append(doc)
    return out


def load_jsonl(path: Path | str, schema: Optional[Dict[str, Any]] = None) -> List[Any]:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read {p}: {exc.strerror or exc}", source=str(p)) from exc
    return parse_jsonl(text.splitlines(), schema, source=str(p))
