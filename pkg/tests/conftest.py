import sys
from pathlib import Path

import pytest

from retrans.decode import EchoLexiconDecoder
from retrans.synthetic import save_dictionary, synthetic_corpus, synthetic_dictionary

HELPERS = Path(__file__).parent / "helpers"


@pytest.fixture(scope="session")
def dictionary():
    return synthetic_dictionary()


@pytest.fixture(scope="session")
def small_corpus():
    return synthetic_corpus(10, seed=7)


@pytest.fixture(scope="session")
def echo_decoder(dictionary):
    return EchoLexiconDecoder(dictionary=dictionary)


@pytest.fixture(scope="session")
def reorder_decoder(dictionary):
    return EchoLexiconDecoder(dictionary=dictionary, reorder_window=2)


@pytest.fixture(scope="session")
def dict_file(dictionary, tmp_path_factory):
    path = tmp_path_factory.mktemp("dict") / "dict.tsv"
    save_dictionary(dictionary, path)
    return path


def server_command(mode="good", dict_path=None):
    cmd = f"{sys.executable} {HELPERS / 'ipc_servers.py'} --mode {mode}"
    if dict_path is not None:
        cmd += f" --dict {dict_path}"
    return cmd


@pytest.fixture(scope="session")
def good_server_command(dict_file):
    return server_command("good", dict_file)
