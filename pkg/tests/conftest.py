"""Shared fixtures: the bibliographic example WDB (two cross-linked files)
and helpers for building random closed systems."""

from __future__ import annotations

import random
from pathlib import Path
from typing import Dict, List, Tuple

import pytest

from hypersetdb.names import Element, EquationSystem, SetName


def bibdb_f1_text(f1_url: str, f2_url: str) -> str:
    return f"""<?xml version="1.0"?>
<set:eqns
 xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance"
 xsi:noNamespaceSchemaLocation="http://www.csc.liv.ac.uk/~molyneux/XML-WDB/schema/xml-wdb.xsd"
 xmlns:set="http://www.csc.liv.ac.uk/~molyneux/XML-WDB">

  <set:eqn set:id="BibDB">
    <paper set:href="{f2_url}#p1"/>
    <paper set:href="{f2_url}#p2"/>
    <paper set:href="{f2_url}#p3"/>
    <book set:ref="b1"/>
    <book set:ref="b2"/>
  </set:eqn>

  <set:eqn set:id="b1">
    <refers-to set:ref="b2"/>
    <refers-to set:href="{f2_url}#p1"/>
  </set:eqn>

  <set:eqn set:id="b2">
    <author>Jones</author>
    <title>Databases</title>
  </set:eqn>

</set:eqns>
"""


def bibdb_f2_text(f1_url: str, f2_url: str) -> str:
    return f"""<?xml version="1.0"?>
<set:eqns
 xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance"
 xsi:noNamespaceSchemaLocation="http://www.csc.liv.ac.uk/~molyneux/XML-WDB/schema/xml-wdb.xsd"
 xmlns:set="http://www.csc.liv.ac.uk/~molyneux/XML-WDB">

  <set:eqn set:id="p1">
    <refers-to set:ref="p2"/>
  </set:eqn>

  <set:eqn set:id="p2">
    <author>Smith</author>
    <title>Databases</title>
    <refers-to set:ref="p3"/>
  </set:eqn>

  <set:eqn set:id="p3">
    <author>Jones</author>
    <title>Databases</title>
  </set:eqn>

</set:eqns>
"""


class BibDb:
    """The two bibliography files served over file:// URLs."""

    def __init__(self, directory: Path) -> None:
        self.directory = directory
        self.f1_url = directory.joinpath("BibDB-f1.xml").as_uri()
        self.f2_url = directory.joinpath("BibDB-f2.xml").as_uri()
        directory.joinpath("BibDB-f1.xml").write_text(
            bibdb_f1_text(self.f1_url, self.f2_url), encoding="utf-8")
        directory.joinpath("BibDB-f2.xml").write_text(
            bibdb_f2_text(self.f1_url, self.f2_url), encoding="utf-8")

    def name(self, simple: str) -> SetName:
        url = self.f1_url if simple in ("BibDB", "b1", "b2") else self.f2_url
        return SetName(url, simple)


@pytest.fixture(scope="session")
def bibdb(tmp_path_factory) -> BibDb:
    return BibDb(tmp_path_factory.mktemp("bibdb"))


def random_closed_system(rng: random.Random, max_names: int = 25,
                         max_labels: int = 4, url: str = "mem://rand.xml"
                         ) -> EquationSystem:
    """A random closed equation system: arbitrary labelled edges, cycles
    allowed."""
    count = rng.randint(1, max_names)
    names = [SetName(url, "n%d" % i) for i in range(count)]
    labels = ["l%d" % i for i in range(rng.randint(1, max_labels))]
    system = EquationSystem()
    for name in names:
        degree = rng.randint(0, min(4, count))
        elements = [Element(rng.choice(labels), rng.choice(names))
                    for _ in range(degree)]
        system.define(name, elements)
    return system


def duplicate_and_shuffle(system: EquationSystem, rng: random.Random,
                          url: str = "mem://rand2.xml"
                          ) -> Tuple[EquationSystem, Dict[SetName, SetName]]:
    """A system presenting the same hypersets differently: every name is
    renamed, element lists are shuffled and duplicated, and some names gain
    bisimilar duplicate definitions."""
    mapping = {n: SetName(url, n.simple + "-r") for n in system.equations}
    duplicated = [n for n in system.equations if rng.random() < 0.4]
    clones = {n: SetName(url, n.simple + "-clone") for n in duplicated}
    out = EquationSystem()

    def rewrite(elements: List[Element]) -> List[Element]:
        rewritten = []
        for el in elements:
            target = mapping[el.member]
            if el.member in clones and rng.random() < 0.5:
                target = clones[el.member]
            rewritten.append(Element(el.label, target))
        extra = [rng.choice(rewritten) for _ in rewritten if rng.random() < 0.3]
        combined = rewritten + extra
        rng.shuffle(combined)
        return combined

    for name, elements in system.equations.items():
        out.define(mapping[name], rewrite(elements))
    for name in duplicated:
        out.define(clones[name], rewrite(system.equations[name]))
    return out, mapping


# -- acceptance reporting ------------------------------------------------------

import re as _re

_CRITERION_RE = _re.compile(r"test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    outcomes = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            match = _CRITERION_RE.search(getattr(report, "nodeid", ""))
            if match is None:
                continue
            number = int(match.group(1))
            ok = status == "passed"
            outcomes[number] = outcomes.get(number, True) and ok
    if not outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number in sorted(outcomes):
        verdict = "PASS" if outcomes[number] else "FAIL"
        terminalreporter.write_line("ACCEPTANCE CRITERION %2d: %s" % (number, verdict))
