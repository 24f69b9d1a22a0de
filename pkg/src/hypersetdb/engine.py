"""The Oracle: a service answering bisimulation questions Yes/No/Unknown.

Two modes: a background engine that walks the served WDB documents, derives
all bisimulation facts (optionally seeded from approximation files) and
postulates the remainder at exhaustion; and a trivial imitation answering
straight from an XML file of facts with per-fact delays.

Wire protocol (newline-delimited text over TCP):
    request   ASK <full-name-x> <full-name-y>
    response  YES <x> <y> | NO <x> <y> | UNKNOWN <x> <y>
"""

from __future__ import annotations

import itertools
import socket
import socketserver
import threading
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .approx import make_approx_reader
from .bisim import (BisimHelpers, FactStore, OracleValue, bisimilar,
                    naive_bisimulation, pair_key)
from .names import EquationSystem, SetName, WdbError
from .store import Fetcher, SessionStore


class OracleError(WdbError):
    pass


@dataclass
class OracleAnswer:
    x: SetName
    y: SetName
    value: OracleValue


def _full_name(text: str) -> SetName:
    url, _, simple = text.rpartition("#")
    if not url or not simple:
        raise OracleError("not a full set name: %r" % text)
    return SetName(url, simple)


# ---------------------------------------------------------------------------
# Trivial oracle: facts with delays, served from an XML file
# ---------------------------------------------------------------------------

class TrivialOracle:
    """Answers from a fixed fact table; a fact with delay d milliseconds reads
    Unknown until d has passed since service start."""

    def __init__(self, facts: Dict[Tuple[SetName, SetName], Tuple[bool, float]]) -> None:
        self.facts = facts
        self.started = time.monotonic()

    @classmethod
    def from_xml(cls, text: str) -> "TrivialOracle":
        try:
            root = ET.fromstring(text)
        except ET.ParseError as exc:
            raise OracleError("malformed oracle file: %s" % exc)
        if root.tag.rpartition("}")[2] != "oracle":
            raise OracleError("unexpected root element %r" % root.tag)
        facts: Dict[Tuple[SetName, SetName], Tuple[bool, float]] = {}
        for group in root:
            if group.tag.rpartition("}")[2] != "facts":
                continue
            first = _full_name(group.attrib["set_name"])
            for fact in group:
                if fact.tag.rpartition("}")[2] != "fact":
                    continue
                second = _full_name(fact.attrib["set_name"])
                value = fact.attrib["value"]
                if value not in ("yes", "no"):
                    raise OracleError("bad fact value %r" % value)
                delay = float(fact.attrib.get("delay", "0"))
                facts[pair_key(first, second)] = (value == "yes", delay)
        return cls(facts)

    def answer(self, x: SetName, y: SetName) -> OracleValue:
        if x == y:
            return OracleValue.YES
        entry = self.facts.get(pair_key(x, y))
        if entry is None:
            return OracleValue.UNKNOWN
        value, delay_ms = entry
        if (time.monotonic() - self.started) * 1000.0 < delay_ms:
            return OracleValue.UNKNOWN
        return OracleValue.YES if value else OracleValue.NO


def generate_trivial_oracle_xml(system: EquationSystem,
                                delays: Optional[Dict[Tuple[SetName, SetName], int]] = None,
                                default_delay: int = 0) -> str:
    """All pairwise facts of a closed WDB in the grouped oracle file format;
    values are computed, correctness is therefore guaranteed."""
    blocks = naive_bisimulation(system)
    names = list(system.equations)
    delays = delays or {}
    root = ET.Element("oracle")
    for i, first in enumerate(names):
        group = ET.SubElement(root, "facts")
        group.set("set_name", first.full)
        for second in names[i + 1:]:
            fact = ET.SubElement(group, "fact")
            fact.set("delay", str(delays.get(pair_key(first, second), default_delay)))
            fact.set("set_name", second.full)
            fact.set("value", "yes" if blocks[first] == blocks[second] else "no")
    return '<?xml version="1.0"?>\n' + ET.tostring(root, encoding="unicode")


# ---------------------------------------------------------------------------
# The background bisimulation engine
# ---------------------------------------------------------------------------

class BisimulationEngine:
    """Derives all bisimulation facts for the served WDB in background time.

    The engine loads its root documents and then resolves every pair of known
    names, in lexicographic order without prioritisation, using the same lazy
    resolution algorithm as the query system; newly discovered documents feed
    further sweeps until nothing is left undecided.  With
    use_approximations=True the approximation file next to each fetched
    document seeds the fact table without derivation.
    """

    def __init__(self, roots: List[str], fetcher: Fetcher,
                 use_approximations: bool = False) -> None:
        self.roots = list(roots)
        self.store = SessionStore(fetcher)
        self.facts = FactStore()
        self.use_approximations = use_approximations
        self.helpers = BisimHelpers(
            approx_reader=make_approx_reader(fetcher) if use_approximations else None)
        self.complete = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self._failure: Optional[Exception] = None

    @property
    def documents_fetched(self) -> int:
        return len(self.store.loaded_documents)

    @property
    def productive_rounds(self) -> int:
        return self.facts.productive_rounds

    # -- background work ------------------------------------------------------

    def start(self) -> None:
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def _run(self) -> None:
        try:
            for url in self.roots:
                self.store.load_document(url)
            while True:
                progress = self._walk_reachable()
                names = sorted(self.store.system.equations)
                for x, y in itertools.combinations(names, 2):
                    if self.facts.decided(x, y) is None:
                        bisimilar(x, y, self.store, self.facts, self.helpers)
                        progress = True
                if not progress and len(self.store.system.equations) == len(names):
                    break
        except Exception as exc:  # pragma: no cover - surfaced via join()
            self._failure = exc
        finally:
            self.complete.set()

    def _walk_reachable(self) -> bool:
        """Load documents of referenced names not yet covered."""
        progress = False
        for name in list(self.store.system.referenced_names()):
            if name not in self.store.system and not name.is_local() \
                    and name.url not in self.store.loaded_documents:
                self.store.load_document(name.url)
                progress = True
        return progress

    def join(self, timeout: Optional[float] = None) -> None:
        if self._thread is not None:
            self._thread.join(timeout)
        if self._failure is not None:
            raise self._failure

    # -- answering ---------------------------------------------------------------

    def answer(self, x: SetName, y: SetName) -> OracleValue:
        decided = self.facts.decided(x, y)
        if decided is None:
            return OracleValue.UNKNOWN
        return OracleValue.YES if decided else OracleValue.NO


# ---------------------------------------------------------------------------
# TCP service and client
# ---------------------------------------------------------------------------

class _AskHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        while True:
            line = self.rfile.readline()
            if not line:
                return
            parts = line.decode("utf-8").split()
            if len(parts) != 3 or parts[0] != "ASK":
                self.wfile.write(b"ERROR malformed request\n")
                continue
            try:
                x, y = _full_name(parts[1]), _full_name(parts[2])
            except OracleError:
                self.wfile.write(b"ERROR malformed set name\n")
                continue
            value = self.server.oracle_answer(x, y)  # type: ignore[attr-defined]
            word = {OracleValue.YES: "YES", OracleValue.NO: "NO",
                    OracleValue.UNKNOWN: "UNKNOWN"}[value]
            reply = "%s %s %s\n" % (word, x.full, y.full)
            self.wfile.write(reply.encode("utf-8"))


class OracleServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, answer_fn) -> None:
        super().__init__(address, _AskHandler)
        self._answer_fn = answer_fn

    def oracle_answer(self, x: SetName, y: SetName) -> OracleValue:
        return self._answer_fn(x, y)


def serve(answer_fn, host: str = "127.0.0.1", port: int = 0) -> OracleServer:
    """Start the ASK protocol service in a background thread; returns the
    server (its address is server.server_address)."""
    server = OracleServer((host, port), answer_fn)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server


class OracleClient:
    """Blocking request/response client for the ASK protocol."""

    def __init__(self, host: str, port: int, timeout: float = 30.0) -> None:
        self.address = (host, port)
        self.timeout = timeout
        self._sock: Optional[socket.socket] = None
        self._file = None
        self._lock = threading.Lock()

    def _connect(self) -> None:
        if self._sock is None:
            self._sock = socket.create_connection(self.address, timeout=self.timeout)
            self._file = self._sock.makefile("rwb")

    def ask(self, x: SetName, y: SetName) -> OracleValue:
        with self._lock:
            self._connect()
            request = "ASK %s %s\n" % (x.full, y.full)
            self._file.write(request.encode("utf-8"))
            self._file.flush()
            line = self._file.readline().decode("utf-8").split()
            if not line:
                raise OracleError("oracle connection closed")
            if line[0] == "YES":
                return OracleValue.YES
            if line[0] == "NO":
                return OracleValue.NO
            if line[0] == "UNKNOWN":
                return OracleValue.UNKNOWN
            raise OracleError("unexpected oracle reply: %s" % " ".join(line))

    def close(self) -> None:
        with self._lock:
            if self._sock is not None:
                try:
                    self._sock.close()
                finally:
                    self._sock = None
                    self._file = None

    def __call__(self, x: SetName, y: SetName) -> OracleValue:
        return self.ask(x, y)
