"""Callback script analysis helpers over the ESTree AST."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterator, Optional

from .jsdaemon import parse_script, tokenize_script

FUNCTION_TYPES = {
    "FunctionDeclaration",
    "FunctionExpression",
    "ArrowFunctionExpression",
}

LOOKUP_CALLEES = {"getElementById", "querySelector", "querySelectorAll"}


def walk(node: Any) -> Iterator[dict]:
    """Yield every AST node (dicts with a `type`), depth-first."""
    stack = [node]
    while stack:
        current = stack.pop()
        if isinstance(current, list):
            stack.extend(reversed(current))
            continue
        if not isinstance(current, dict):
            continue
        if "type" in current:
            yield current
        for key in reversed(list(current.keys())):
            if key in ("loc", "range"):
                continue
            value = current[key]
            if isinstance(value, (dict, list)):
                stack.append(value)


def walk_within_function(body: Any) -> Iterator[dict]:
    """Walk a function body without entering nested functions."""
    stack = [body]
    while stack:
        current = stack.pop()
        if isinstance(current, list):
            stack.extend(reversed(current))
            continue
        if not isinstance(current, dict):
            continue
        if "type" in current:
            yield current
        for key in reversed(list(current.keys())):
            if key in ("loc", "range"):
                continue
            value = current[key]
            if isinstance(value, dict) and value.get("type") in FUNCTION_TYPES:
                continue
            if isinstance(value, (dict, list)):
                stack.append(value)


@dataclass(frozen=True)
class TopLevelFunction:
    name: str
    params: tuple[str, ...]
    node: dict
    simple_params: bool


def _param_names(params: list) -> tuple[tuple[str, ...], bool]:
    names = []
    simple = True
    for param in params:
        if param.get("type") == "Identifier":
            names.append(param["name"])
        else:
            names.append("<pattern>")
            simple = False
    return tuple(names), simple


def top_level_functions(ast: dict) -> list[TopLevelFunction]:
    """Named functions at program top level (declarations and
    const/let/var initializers holding a function expression)."""
    out = []
    for stmt in ast.get("body", []):
        if stmt.get("type") == "FunctionDeclaration" and stmt.get("id"):
            params, simple = _param_names(stmt.get("params", []))
            out.append(
                TopLevelFunction(stmt["id"]["name"], params, stmt, simple)
            )
        elif stmt.get("type") == "VariableDeclaration":
            for declarator in stmt.get("declarations", []):
                init = declarator.get("init") or {}
                if (
                    init.get("type") in FUNCTION_TYPES
                    and declarator.get("id", {}).get("type") == "Identifier"
                ):
                    params, simple = _param_names(init.get("params", []))
                    out.append(
                        TopLevelFunction(
                            declarator["id"]["name"], params, init, simple
                        )
                    )
    return out


def return_sites(func_node: dict) -> list[Optional[dict]]:
    """Return-value expressions of a function, nested functions excluded.

    An arrow with an expression body contributes that expression. A bare
    `return;` contributes None.
    """
    body = func_node.get("body")
    if func_node.get("type") == "ArrowFunctionExpression" and (
        not isinstance(body, dict) or body.get("type") != "BlockStatement"
    ):
        return [body]
    sites = []
    for node in walk_within_function(body):
        if node.get("type") == "ReturnStatement":
            sites.append(node.get("argument"))
    return sites


def member_path(node: dict, roots: set[str]) -> Optional[tuple[str, list[str]]]:
    """MemberExpression -> (root name, segments) when statically resolvable.

    Only identifier roots from `roots` qualify; computed segments must be
    string literals. Optional chaining nodes resolve the same way.
    """
    segments: list[str] = []
    current = node
    while True:
        node_type = current.get("type")
        if node_type in ("MemberExpression",):
            prop = current.get("property", {})
            if current.get("computed"):
                if prop.get("type") == "Literal" and isinstance(prop.get("value"), str):
                    segments.append(prop["value"])
                elif prop.get("type") == "Literal" and isinstance(
                    prop.get("value"), (int, float)
                ):
                    segments.append(str(prop["value"]))
                else:
                    return None
            elif prop.get("type") == "Identifier":
                segments.append(prop["name"])
            else:
                return None
            current = current.get("object", {})
        elif node_type == "ChainExpression":
            current = current.get("expression", {})
        elif node_type == "Identifier":
            name = current["name"]
            if name in roots:
                segments.reverse()
                return name, segments
            return None
        else:
            return None


def dynamic_lookup_calls(ast: dict) -> list[dict]:
    """Element-lookup calls whose argument is not a string literal."""
    out = []
    for node in walk(ast):
        if node.get("type") != "CallExpression":
            continue
        callee = node.get("callee", {})
        if callee.get("type") == "ChainExpression":
            callee = callee.get("expression", {})
        if callee.get("type") != "MemberExpression":
            continue
        prop = callee.get("property", {})
        name = prop.get("name") if not callee.get("computed") else (
            prop.get("value") if prop.get("type") == "Literal" else None
        )
        if name not in LOOKUP_CALLEES:
            continue
        args = node.get("arguments", [])
        if not args:
            continue
        first = args[0]
        if first.get("type") == "Literal" and isinstance(first.get("value"), str):
            continue
        out.append(node)
    return out


def rewrite_string_tokens(source: str, replacements: dict[str, str]) -> str:
    """Replace string/template tokens whose value matches a key.

    Keys match both the bare value and, for string tokens, the
    '#value' selector form. Token spans from the tokenizer cover the
    quotes for strings, so splices rebuild the literal with the same
    quote character; template tokens cover only the raw text.
    """
    if not replacements:
        return source
    tokens = tokenize_script(source)
    splices: list[tuple[int, int, str]] = []
    for token in tokens:
        value = token.get("value")
        if not isinstance(value, str):
            continue
        if token["type"] == "string":
            if value in replacements:
                quote = source[token["start"]]
                splices.append(
                    (token["start"], token["end"], f"{quote}{replacements[value]}{quote}")
                )
            elif value.startswith("#") and value[1:] in replacements:
                quote = source[token["start"]]
                splices.append(
                    (
                        token["start"],
                        token["end"],
                        f"{quote}#{replacements[value[1:]]}{quote}",
                    )
                )
        elif token["type"] == "template" and value in replacements:
            splices.append((token["start"], token["end"], replacements[value]))
    out = source
    for start, end, replacement in sorted(splices, reverse=True):
        out = out[:start] + replacement + out[end:]
    return out


def string_literal_values(source: str) -> list[str]:
    """Values of all string tokens in the source."""
    return [
        t["value"]
        for t in tokenize_script(source)
        if t["type"] == "string" and isinstance(t.get("value"), str)
    ]
