"""Prometheus-style rule-group files (YAML)."""

from __future__ import annotations

from pathlib import Path

import yaml

from ..alerts import AlertRule
from ..errors import InputError


def load_rule_file(path: str | Path) -> list[AlertRule]:
    """Read a rule-group document: {groups: [{name, rules: [...]}]}."""
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise InputError(f"cannot read rule file {path}: {exc}") from exc
    rules = []
    for group in (doc or {}).get("groups", []):
        for entry in group.get("rules", []):
            try:
                rules.append(AlertRule(
                    id=str(entry.get("id", entry["name"])),
                    name=str(entry["name"]),
                    expr=str(entry["expr"]),
                    for_duration_minutes=int(entry.get("for", 0)),
                    labels=dict(entry.get("labels", {})),
                    annotations=dict(entry.get("annotations", {})),
                ))
            except KeyError as exc:
                raise InputError(f"rule entry missing field {exc} in {path}") from exc
    names = [r.name for r in rules]
    if len(names) != len(set(names)):
        raise InputError(f"rule names must be unique within {path}")
    return rules


def save_rule_file(rules: list[AlertRule], path: str | Path,
                   group_name: str = "guardian") -> None:
    doc = {
        "groups": [{
            "name": group_name,
            "rules": [
                {
                    "id": r.id,
                    "name": r.name,
                    "expr": r.expr,
                    "for": r.for_duration_minutes,
                    "labels": dict(r.labels),
                    "annotations": dict(r.annotations),
                }
                for r in rules
            ],
        }]
    }
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=True))
