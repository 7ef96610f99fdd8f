"""Regenerate the committed inclusion-oracle fixtures.

Run from the repository root:

    python tests/make_inclusion_fixtures.py

The verdicts come exclusively from the independent oracle implementations
in tests/oracles.py (loop-based blocks, SVD nullspaces); the library is not
imported. The output is committed at tests/fixtures/inclusion_oracle.json
and the test suite fails if the file drifts from a fresh oracle run.
"""

import json
import pathlib

import oracles


def build_payload() -> dict:
    cases = {
        name: oracles.inclusion_oracle(state) for name, state in oracles.fixture_cases().items()
    }
    return {
        "generated_by": "tests/make_inclusion_fixtures.py",
        "oracle": "loop-based conditional blocks + SVD nullspace (scipy null_space)",
        "leak_tol": oracles.LEAK_TOL,
        "cases": cases,
    }


def main() -> None:
    out_path = pathlib.Path(__file__).parent / "fixtures" / "inclusion_oracle.json"
    out_path.parent.mkdir(exist_ok=True)
    with out_path.open("w", encoding="utf-8") as fh:
        json.dump(build_payload(), fh, indent=1)
        fh.write("\n")
    print(f"wrote {out_path}")


if __name__ == "__main__":
    main()
