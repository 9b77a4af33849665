"""Static validity checks over synthesized callbacks.

Three analyses, all syntactic:

* signature: exactly one top-level function named `callback` taking two
  parameters, every return site an explicit two-element array (the
  template's [transforms, chart] shape).
* property safety: writes into the chart argument must have their
  parent path either present in the current chart document or created
  (guarded) earlier in the function.
* transform classification: a widget is a transform widget when any
  return site's transforms component is statically non-empty; opaque
  flows classify true with a warning.
"""

from __future__ import annotations

from typing import Any, Optional

from ..chart.model import ChartSpec, format_pointer, has_path
from .jsdaemon import parse_script
from .report import AnalysisReport, Finding
from .script import (
    FUNCTION_TYPES,
    member_path,
    return_sites,
    top_level_functions,
    walk_within_function,
)

CALLBACK_NAME = "callback"


def find_callback(ast: dict) -> Optional[dict]:
    functions = [f for f in top_level_functions(ast) if f.name == CALLBACK_NAME]
    if len(functions) == 1:
        return functions[0].node
    return None


def check_callback_signature(callback_source: str) -> AnalysisReport:
    """Name, arity, and return-shape check."""
    try:
        ast = parse_script(callback_source)
    except Exception as exc:
        return AnalysisReport(
            (Finding("signature", "error", f"callback does not parse: {exc}"),)
        )
    findings: list[Finding] = []
    named = [f for f in top_level_functions(ast) if f.name == CALLBACK_NAME]
    if len(named) != 1:
        return AnalysisReport(
            (
                Finding(
                    "signature",
                    "error",
                    f"expected exactly one top-level function named 'callback', "
                    f"found {len(named)}",
                ),
            )
        )
    func = named[0]
    if len(func.params) != 2:
        findings.append(
            Finding(
                "signature",
                "error",
                f"callback must take exactly two parameters (event, chart), "
                f"takes {len(func.params)}",
            )
        )
    sites = return_sites(func.node)
    if not sites:
        findings.append(
            Finding(
                "signature",
                "error",
                "callback never returns the [transforms, chart] pair",
            )
        )
    for site in sites:
        if (
            site is None
            or site.get("type") != "ArrayExpression"
            or len(site.get("elements", [])) != 2
        ):
            loc = (site or {}).get("loc", {}).get("start", {})
            findings.append(
                Finding(
                    "signature",
                    "error",
                    "return value must be a two-element [transforms, chart] array",
                    location=f"line {loc.get('line', '?')}",
                )
            )
    return AnalysisReport(tuple(findings))


def _object_literal_paths(node: dict, prefix: list[str], out: set[tuple[str, ...]]) -> None:
    """Paths created by assigning an object literal."""
    if node.get("type") != "ObjectExpression":
        return
    for prop in node.get("properties", []):
        if prop.get("type") != "Property":
            continue
        key = prop.get("key", {})
        if prop.get("computed"):
            continue
        if key.get("type") == "Identifier":
            name = key["name"]
        elif key.get("type") == "Literal" and isinstance(key.get("value"), str):
            name = key["value"]
        else:
            continue
        path = prefix + [name]
        out.add(tuple(path))
        value = prop.get("value", {})
        if isinstance(value, dict):
            _object_literal_paths(value, path, out)


def _resolve_target(node: dict, roots: set[str], aliases: dict) -> Optional[list[str]]:
    """Member expression -> chart-relative path, through simple aliases."""
    resolved = member_path(node, roots | set(aliases))
    if resolved is None:
        return None
    root, segments = resolved
    if root in aliases:
        return aliases[root] + segments
    return segments


def check_property_safety(callback_source: str, chart: ChartSpec) -> AnalysisReport:
    """Writes into the chart must have existing or created parents."""
    try:
        ast = parse_script(callback_source)
    except Exception as exc:
        return AnalysisReport(
            (Finding("null_safety", "error", f"callback does not parse: {exc}"),)
        )
    callback = find_callback(ast)
    if callback is None or len(callback.get("params", [])) < 2:
        # the signature check owns this failure
        return AnalysisReport(())
    params = callback["params"]
    if params[1].get("type") != "Identifier":
        return AnalysisReport(())
    chart_name = params[1]["name"]
    roots = {chart_name}
    document = chart.document

    created: set[tuple[str, ...]] = set()
    guarded: dict[tuple[str, ...], int] = {}
    aliases: dict[str, list[str]] = {}
    findings: list[Finding] = []

    def path_known(path: tuple[str, ...]) -> bool:
        if not path:
            return True
        if path in created or guarded.get(path, 0) > 0:
            return True
        return has_path(document, format_pointer(list(path)))

    def guard_paths(test: dict) -> set:
        out: set = set()
        for node in walk_within_function(test):
            if node.get("type") == "MemberExpression":
                path = _resolve_target(node, roots, aliases)
                if path:
                    for i in range(1, len(path) + 1):
                        out.add(tuple(path[:i]))
        return out

    def with_guards(test: Any, body: Any) -> None:
        local = guard_paths(test if isinstance(test, dict) else {})
        for path in local:
            guarded[path] = guarded.get(path, 0) + 1
        visit(body)
        for path in local:
            guarded[path] -= 1

    def visit(node: Any) -> None:
        if isinstance(node, list):
            for item in node:
                visit(item)
            return
        if not isinstance(node, dict):
            return
        node_type = node.get("type")
        if node_type in FUNCTION_TYPES and node is not callback:
            return
        if node_type == "IfStatement":
            visit(node.get("test"))
            with_guards(node.get("test"), node.get("consequent"))
            visit(node.get("alternate"))
            return
        if node_type == "ConditionalExpression":
            visit(node.get("test"))
            with_guards(node.get("test"), node.get("consequent"))
            visit(node.get("alternate"))
            return
        if node_type == "LogicalExpression" and node.get("operator") == "&&":
            visit(node.get("left"))
            with_guards(node.get("left"), node.get("right"))
            return
        if node_type == "VariableDeclarator":
            ident = node.get("id", {})
            init = node.get("init")
            if (
                ident.get("type") == "Identifier"
                and isinstance(init, dict)
                and init.get("type") in ("MemberExpression", "ChainExpression")
            ):
                path = _resolve_target(init, roots, aliases)
                if path is not None:
                    aliases[ident["name"]] = path
            visit(init)
            return
        if node_type == "AssignmentExpression":
            visit(node.get("right"))
            target = node.get("left", {})
            if target.get("type") == "MemberExpression":
                path = _resolve_target(target, roots, aliases)
                if path is not None:
                    parent = tuple(path[:-1])
                    missing = None
                    for i in range(1, len(parent) + 1):
                        prefix = tuple(parent[:i])
                        if not path_known(prefix):
                            missing = prefix
                            break
                    if missing is not None:
                        findings.append(
                            Finding(
                                "null_safety",
                                "error",
                                "write requires a parent that may be missing; "
                                "guard or create it first",
                                location=format_pointer(list(missing)),
                            )
                        )
                    full = tuple(path)
                    created.add(full)
                    right = node.get("right", {})
                    if isinstance(right, dict):
                        _object_literal_paths(right, list(path), created)
            return
        for key, value in node.items():
            if key in ("loc", "range"):
                continue
            if isinstance(value, (dict, list)):
                visit(value)

    visit(callback.get("body"))
    # one finding per distinct missing path reads better than one per write
    unique: dict[tuple[str, str], Finding] = {}
    for finding in findings:
        unique.setdefault((finding.rule, finding.location), finding)
    return AnalysisReport(tuple(unique.values()))


def _array_is_empty(node: dict) -> Optional[bool]:
    """True/False when statically known, None when opaque."""
    if not isinstance(node, dict):
        return None
    if node.get("type") == "ArrayExpression":
        elements = node.get("elements", [])
        if not elements:
            return True
        if any(e and e.get("type") == "SpreadElement" for e in elements):
            return None
        return False
    return None


def classify_transform_widget(callback_source: str) -> tuple[bool, AnalysisReport]:
    """True iff some return's transforms component can be non-empty.

    Undecidable data flow classifies true (the toggle must exist if the
    widget may filter) with a classification warning.
    """
    try:
        ast = parse_script(callback_source)
    except Exception as exc:
        return True, AnalysisReport(
            (Finding("classification", "warning", f"callback does not parse: {exc}"),)
        )
    callback = find_callback(ast)
    if callback is None:
        return True, AnalysisReport(
            (
                Finding(
                    "classification",
                    "warning",
                    "no unique callback function; classified as transform widget",
                ),
            )
        )

    # gather static knowledge about identifiers bound to array literals
    assigned_nonempty: set[str] = set()
    assigned_empty: set[str] = set()
    assigned_opaque: set[str] = set()
    mutated: set[str] = set()
    for node in walk_within_function(callback.get("body")):
        node_type = node.get("type")
        if node_type == "VariableDeclarator":
            ident = node.get("id", {})
            init = node.get("init")
            if ident.get("type") != "Identifier":
                continue
            name = ident["name"]
            if init is None:
                assigned_empty.add(name)
                continue
            emptiness = _array_is_empty(init)
            if emptiness is True:
                assigned_empty.add(name)
            elif emptiness is False:
                assigned_nonempty.add(name)
            else:
                assigned_opaque.add(name)
        elif node_type == "AssignmentExpression":
            target = node.get("left", {})
            if target.get("type") != "Identifier":
                continue
            name = target["name"]
            emptiness = _array_is_empty(node.get("right", {}))
            if emptiness is True:
                assigned_empty.add(name)
            elif emptiness is False:
                assigned_nonempty.add(name)
            else:
                assigned_opaque.add(name)
        elif node_type == "CallExpression":
            callee = node.get("callee", {})
            if (
                callee.get("type") == "MemberExpression"
                and not callee.get("computed")
                and callee.get("property", {}).get("name")
                in ("push", "unshift", "splice")
                and callee.get("object", {}).get("type") == "Identifier"
            ):
                mutated.add(callee["object"]["name"])

    def transforms_state(node: Optional[dict]) -> str:
        """'empty' | 'nonempty' | 'opaque' for one transforms expression."""
        if node is None:
            return "opaque"
        direct = _array_is_empty(node)
        if direct is True:
            return "empty"
        if direct is False:
            return "nonempty"
        if node.get("type") == "Identifier":
            name = node["name"]
            if name in assigned_nonempty or name in mutated:
                return "nonempty"
            if name in assigned_opaque:
                return "opaque"
            if name in assigned_empty:
                return "empty"
            return "opaque"
        if node.get("type") == "ConditionalExpression":
            states = {
                transforms_state(node.get("consequent")),
                transforms_state(node.get("alternate")),
            }
            if "nonempty" in states:
                return "nonempty"
            if "opaque" in states:
                return "opaque"
            return "empty"
        return "opaque"

    states = []
    for site in return_sites(callback):
        if site is None or site.get("type") != "ArrayExpression":
            states.append("opaque")
            continue
        elements = site.get("elements", [])
        states.append(transforms_state(elements[0] if elements else None))

    if "nonempty" in states:
        return True, AnalysisReport(())
    if "opaque" in states:
        return True, AnalysisReport(
            (
                Finding(
                    "classification",
                    "warning",
                    "transforms flow is not statically decidable; "
                    "conservatively classified as transform widget",
                ),
            )
        )
    return False, AnalysisReport(())
