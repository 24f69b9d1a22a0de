"""Per-file local approximations of global bisimulation.

From one document alone two relations are computable: an upper approximation
(its negative facts are globally valid) and a lower approximation (pairs it
fails to separate are globally equal).  Combining both gives the simple
approximation set: definite yes/no facts about global equality shipped next to
the document as an XML file.
"""

from __future__ import annotations

import itertools
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Dict, List, Set, Tuple

from .names import Element, EquationSystem, SetName, WdbError
from .store import Fetcher

Pair = Tuple[SetName, SetName]


class ApproxError(WdbError):
    pass


def _pair(x: SetName, y: SetName) -> Pair:
    return (x, y) if x.full <= y.full else (y, x)


@dataclass
class Fragment:
    """One document's slice of the WDB: its defined names L, the equations for
    L, and L' = L plus every name those equations mention.

    Names invented while flattening nested content (atom encodings and the
    like) are not part of L: the published approximation files list facts
    for the document's declared ids only.
    """

    document_url: str
    local: List[SetName]
    equations: Dict[SetName, List[Element]]

    @classmethod
    def from_system(cls, system: EquationSystem, document_url: str) -> "Fragment":
        local = [n for n in system.equations
                 if n.url == document_url and n not in system.generated]
        if not local:
            raise ApproxError("no equations from %s" % document_url)
        return cls(document_url, local,
                   {n: list(system.equations[n]) for n in local})

    @property
    def almost_local(self) -> Set[SetName]:
        out = set(self.local)
        for expr in self.equations.values():
            out.update(el.member for el in expr)
        return out


@dataclass
class ApproxSet:
    """Local approximation facts for one fragment: negative pairs of the upper
    approximation, negative pairs of the lower approximation, and the combined
    simple approximation (pair -> True for globally equal, False for unequal;
    absent pairs are unknown)."""

    upper_neg: Set[Pair] = field(default_factory=set)
    lower_neg: Set[Pair] = field(default_factory=set)
    simple: Dict[Pair, bool] = field(default_factory=dict)


def upper_approx(fragment: Fragment) -> Set[Pair]:
    """Least fixpoint of the negative rule restricted to local pairs: derived
    inequalities hold globally."""
    local = set(fragment.local)
    neg: Set[Pair] = set()

    def known_neg(u: SetName, v: SetName) -> bool:
        return u != v and u in local and v in local and _pair(u, v) in neg

    changed = True
    while changed:
        changed = False
        for x, y in itertools.combinations(fragment.local, 2):
            if _pair(x, y) in neg:
                continue
            xs, ys = fragment.equations[x], fragment.equations[y]
            if _one_side_neg(xs, ys, known_neg) or _one_side_neg(ys, xs, known_neg):
                neg.add(_pair(x, y))
                changed = True
    return neg


def lower_approx(fragment: Fragment) -> Set[Pair]:
    """Least fixpoint of the relaxed negative rule, where any pair of distinct
    names touching a non-local name is distinct a priori.  Pairs of local
    names not derived here are globally equal."""
    local = set(fragment.local)

    def known_neg(u: SetName, v: SetName) -> bool:
        if u == v:
            return False
        if u not in local or v not in local:
            return True  # a priori knowledge
        return _pair(u, v) in neg

    neg: Set[Pair] = set()
    changed = True
    while changed:
        changed = False
        for x, y in itertools.combinations(fragment.local, 2):
            if _pair(x, y) in neg:
                continue
            xs, ys = fragment.equations[x], fragment.equations[y]
            if _one_side_neg(xs, ys, known_neg) or _one_side_neg(ys, xs, known_neg):
                neg.add(_pair(x, y))
                changed = True
    return neg


def _one_side_neg(xs, ys, known_neg) -> bool:
    for lx, mx in xs:
        if all(lx != ly or known_neg(mx, my) for ly, my in ys):
            return True
    return False


def simple_approx(fragment: Fragment) -> ApproxSet:
    """Globally valid yes/no facts derivable from this fragment alone."""
    out = ApproxSet()
    out.upper_neg = upper_approx(fragment)
    out.lower_neg = lower_approx(fragment)
    for x, y in itertools.combinations(fragment.local, 2):
        key = _pair(x, y)
        if key in out.upper_neg:
            out.simple[key] = False
        elif key not in out.lower_neg:
            out.simple[key] = True
    return out


# ---------------------------------------------------------------------------
# Approximation files
# ---------------------------------------------------------------------------

def approximation_url(document_url: str) -> str:
    """BibDB-f1.xml -> BibDB-f1.approximation.xml (same directory)."""
    if document_url.endswith(".xml"):
        return document_url[:-len(".xml")] + ".approximation.xml"
    return document_url + ".approximation"


def write_approx_file(document_url: str, fragment_names: List[SetName],
                      simple: Dict[Pair, bool]) -> str:
    """Render the simple approximation set in the grouped facts format: one
    <facts> group per local name, listing each unordered pair once under its
    earlier name."""
    root = ET.Element("simple-approximation")
    order = {n: i for i, n in enumerate(fragment_names)}
    for name in fragment_names:
        group = ET.SubElement(root, "facts")
        group.set("set_name", name.full)
        for other in fragment_names[order[name] + 1:]:
            value = simple.get(_pair(name, other))
            if value is None:
                continue
            fact = ET.SubElement(group, "fact")
            fact.set("set_name", other.full)
            fact.set("value", "yes" if value else "no")
    return '<?xml version="1.0"?>\n' + ET.tostring(root, encoding="unicode")


def read_approx_file(text: str) -> List[Tuple[SetName, SetName, bool]]:
    """Parse an approximation file; namespaced and plain element names are both
    accepted."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ApproxError("malformed approximation file: %s" % exc)

    def local(tag: str) -> str:
        return tag.rpartition("}")[2]

    if local(root.tag) != "simple-approximation":
        raise ApproxError("unexpected root element %r" % root.tag)
    facts: List[Tuple[SetName, SetName, bool]] = []
    for group in root:
        if local(group.tag) != "facts":
            continue
        first = _parse_full(group.attrib.get("set_name", ""))
        for fact in group:
            if local(fact.tag) != "fact":
                continue
            second = _parse_full(fact.attrib.get("set_name", ""))
            value = fact.attrib.get("value")
            if value not in ("yes", "no"):
                raise ApproxError("bad fact value %r" % value)
            facts.append((first, second, value == "yes"))
    return facts


def _parse_full(text: str) -> SetName:
    if "#" not in text:
        raise ApproxError("approximation fact names must be full names: %r" % text)
    url, _, simple = text.rpartition("#")
    return SetName(url, simple)


def generate_approximation_file(document_url: str, system: EquationSystem) -> str:
    fragment = Fragment.from_system(system, document_url)
    facts = simple_approx(fragment)
    return write_approx_file(document_url, fragment.local, facts.simple)


def make_approx_reader(fetcher: Fetcher):
    """An approximation reader for bisimilar(): fetches the approximation file
    sitting next to a document, silently empty when absent."""

    def reader(document_url: str) -> List[Tuple[SetName, SetName, bool]]:
        if document_url.startswith("local://"):
            return []
        try:
            text = fetcher(approximation_url(document_url))
        except Exception:
            return []
        try:
            return read_approx_file(text)
        except ApproxError:
            return []

    return reader
