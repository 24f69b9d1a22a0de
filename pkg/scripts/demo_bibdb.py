"""Write the example bibliography WDB to a temp directory and run the worked
queries from an interactive session against it.

    python scripts/demo_bibdb.py
"""

import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from conftest import BibDb  # noqa: E402

from hypersetdb.cli import Session, SessionConfig  # noqa: E402


def main() -> int:
    with tempfile.TemporaryDirectory(prefix="bibdb-") as tmp:
        db = BibDb(Path(tmp))
        print("WDB files written to %s\n" % tmp)
        session = Session(SessionConfig())

        queries = [
            # undeclared identifiers: rejected with two errors
            """set query collect { pub-type:pub
                 where pub-type:pub in BibDB
                 and exists 'refers-to':ref in pub . ref=b2 };""",
            # the corrected reference query
            """set query
                 let set constant BibDB be %s#BibDB,
                     set constant b2 be %s#b2
                 in collect { pub-type:pub
                     where pub-type:pub in BibDB
                     and exists 'refers-to':ref in pub . ref=b2 }
                 endlet;""" % (db.f1_url, db.f1_url),
            # cyclic sets via decoration, then canonisation
            """set query let
                 set constant g = {
                   'null':call Pair("a","b"), 'null':call Pair("b","a"),
                   'null':call Pair("a","c"), 'null':call Pair("a","d"),
                   'null':call Pair("b","d") }
               in call Can ( decorate (g, "a") ) endlet;""",
            "library list;",
        ]
        for source in queries:
            print(">>> %s" % " ".join(source.split()))
            print(session.run_command(source))
            print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
