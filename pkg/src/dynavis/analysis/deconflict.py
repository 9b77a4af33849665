"""Element-id deconfliction across widget markup and callbacks.

Ids colliding with the session's existing ids, or duplicated inside one
fragment, are renamed `<old>_k` with the smallest k >= 2 that is free.
The first occurrence of an intra-fragment duplicate keeps its id; later
occurrences are renamed. Callback references (string literals, '#id'
selector literals, template literals) are rewritten only when the old
id was renamed away entirely; references to an id that survives in the
fragment stay put and are reported as `unresolved_id` warnings when the
id was ambiguous.
"""

from __future__ import annotations

from dataclasses import dataclass

from .jsdaemon import parse_script
from .markup import IdEdit, MarkupInfo, parse_fragment, rewrite_ids
from .report import Finding
from .script import dynamic_lookup_calls, rewrite_string_tokens, string_literal_values


@dataclass(frozen=True)
class RenameEntry:
    old_id: str
    new_id: str

    def to_json(self) -> dict:
        return {"old_id": self.old_id, "new_id": self.new_id}


def _fresh_name(base: str, taken: set[str]) -> str:
    k = 2
    while f"{base}_{k}" in taken:
        k += 1
    return f"{base}_{k}"


def deconflict_ids(
    markup: str, callback_source: str, existing_ids: set[str]
) -> tuple[str, str, list[RenameEntry], list[Finding]]:
    """Rename colliding element ids consistently across markup and script.

    Returns (markup', callback', rename entries, findings). Parse errors
    propagate as MarkupParseError / ScriptParseError.
    """
    info: MarkupInfo = parse_fragment(markup)
    ast = parse_script(callback_source)

    fragment_ids = list(info.ids)
    taken = set(existing_ids) | set(fragment_ids)
    edits: list[IdEdit] = []
    renames: list[RenameEntry] = []
    findings: list[Finding] = []
    seen: set[str] = set()
    # old id -> new id of its first renamed occurrence, plus how many
    # occurrences were renamed and whether the old id survives
    first_new: dict[str, str] = {}
    renamed_count: dict[str, int] = {}
    survives: dict[str, bool] = {}

    for element in info.elements:
        old = element.id
        if old is None:
            continue
        collides = old in existing_ids or old in seen
        if not collides:
            seen.add(old)
            survives[old] = True
            continue
        new = _fresh_name(old, taken)
        taken.add(new)
        seen.add(new)
        edits.append(IdEdit(element_index=element.index, old=old, new=new))
        renames.append(RenameEntry(old, new))
        first_new.setdefault(old, new)
        renamed_count[old] = renamed_count.get(old, 0) + 1
        survives.setdefault(old, False)

    referenced = set(string_literal_values(callback_source))
    referenced |= {v[1:] for v in referenced if v.startswith("#")}

    replacements: dict[str, str] = {}
    retarget: dict[str, str] = {}
    for old, new in first_new.items():
        if survives[old]:
            # first occurrence kept the id; references stay valid but
            # ambiguous if the script mentions it
            if old in referenced:
                findings.append(
                    Finding(
                        rule="unresolved_id",
                        severity="warning",
                        message=(
                            f"id {old!r} is duplicated in the fragment; callback "
                            "references keep pointing at the first occurrence"
                        ),
                        location=old,
                    )
                )
            continue
        replacements[old] = new
        retarget[old] = new
        if renamed_count[old] > 1:
            findings.append(
                Finding(
                    rule="unresolved_id",
                    severity="warning",
                    message=(
                        f"id {old!r} had {renamed_count[old]} renamed occurrences; "
                        f"callback references rewritten to {new!r}"
                    ),
                    location=old,
                )
            )

    new_markup = rewrite_ids(info, edits, retarget) if edits else markup
    new_callback = (
        rewrite_string_tokens(callback_source, replacements)
        if replacements
        else callback_source
    )

    for call in dynamic_lookup_calls(ast):
        loc = call.get("loc", {}).get("start", {})
        findings.append(
            Finding(
                rule="unresolved_id",
                severity="warning",
                message="element lookup with a non-literal argument cannot be "
                "checked against renames",
                location=f"line {loc.get('line', '?')}",
            )
        )
    return new_markup, new_callback, renames, findings
