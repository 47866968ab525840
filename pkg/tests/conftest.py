import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from cfgmask import parse_grammar, transform

ROOT = pathlib.Path(__file__).resolve().parent.parent
GRAMMAR_DIR = ROOT / "grammars"


def load_grammar(name: str, start: str = "start"):
    return transform(parse_grammar((GRAMMAR_DIR / name).read_text(), start=start))


@pytest.fixture(scope="session")
def json_grammar():
    return load_grammar("json.cfg")


@pytest.fixture(scope="session")
def addition_grammar():
    return load_grammar("addition.cfg")


@pytest.fixture(scope="session")
def aplus_grammar():
    return load_grammar("aplus.cfg")
