import pytest

from retrans.conformance import all_passed, run_conformance
from retrans.corpus import TimedChunk
from retrans.decode import DecodeRequest, ExternalDecoder, decode
from retrans.errors import DecoderConformanceError, DecoderTransportError
from retrans.schedule import InterleavePolicy
from retrans.synthetic import synthetic_dictionary
from tests.conftest import server_command


def make_request(tokens=("hund", "katze"), forced_tt=(), session="s1"):
    chunks = tuple(
        TimedChunk(i * 0.5, (i + 1) * 0.5, (tok,)) for i, tok in enumerate(tokens)
    )
    return DecodeRequest(
        source_prefix=chunks,
        forced_translation_prefix=tuple(forced_tt),
        policy=InterleavePolicy(0.0),
        session=session,
    )


class TestExternalDecoder:
    def test_round_trip_with_dictionary(self, good_server_command, dictionary):
        with ExternalDecoder(good_server_command) as dec:
            result = decode(dec, make_request(tokens=("w00", "w01")))
            assert result.transcript == ("w00", "w01")
            assert result.translation == ("v00", "v01")

    def test_forced_prefix_passed_through(self, good_server_command):
        with ExternalDecoder(good_server_command) as dec:
            result = decode(dec, make_request(tokens=("w00", "w01"), forced_tt=("X",)))
            assert result.translation[0] == "X"

    def test_bad_prefix_server_rejected(self, dict_file):
        with ExternalDecoder(server_command("bad-prefix", dict_file)) as dec:
            with pytest.raises(DecoderConformanceError):
                decode(dec, make_request(tokens=("w00",), forced_tt=("NOTDICT",)))

    def test_crash_raises_transport_error(self, dict_file):
        with ExternalDecoder(server_command("crash", dict_file)) as dec:
            decode(dec, make_request(session="first"))
            with pytest.raises(DecoderTransportError):
                decode(dec, make_request(session="second"))

    def test_unknown_command_raises(self):
        dec = ExternalDecoder("/nonexistent/decoder-binary")
        with pytest.raises(DecoderTransportError):
            decode(dec, make_request())

    def test_restart_after_close(self, good_server_command):
        dec = ExternalDecoder(good_server_command)
        decode(dec, make_request(session="a"))
        dec.close()
        result = decode(dec, make_request(session="b"))
        assert result.transcript == ("hund", "katze")
        dec.close()


class TestConformanceSuite:
    def test_good_server_passes_everything(self, dict_file, dictionary):
        checks = run_conformance(server_command("good", dict_file), dictionary)
        failed = [c for c in checks if not c.passed]
        assert all_passed(checks), failed
        names = {c.name for c in checks}
        assert {"handshake", "schema", "forced-prefix", "gamma-0", "gamma-1",
                "determinism", "malformed-input", "shutdown"} <= names

    def test_bad_prefix_server_fails_that_check(self, dict_file, dictionary):
        checks = run_conformance(server_command("bad-prefix", dict_file), dictionary)
        by_name = {c.name: c for c in checks}
        assert not by_name["forced-prefix"].passed
        assert by_name["handshake"].passed

    def test_without_dictionary_skips_content_checks(self, dict_file):
        checks = run_conformance(server_command("good", dict_file))
        names = {c.name for c in checks}
        assert "gamma-0" not in names
        assert all_passed(checks)
