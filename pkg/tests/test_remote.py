import json
import socket
import threading

import pytest

from seqdec.core import DecodeConfig, DecodeInput, ScorerTransportError
from seqdec.decode import beam_decode
from seqdec.remote import RemoteScorer, ScorerServer

from conftest import make_tiny3


@pytest.fixture
def served_tiny3():
    model = make_tiny3()
    server = ScorerServer(model)
    server.start()
    yield model, server.address
    server.shutdown()
    server.server_close()


class TestRemoteScorer:
    def test_row_matches_local_bit_identical(self, served_tiny3):
        model, (host, port) = served_tiny3
        client = RemoteScorer(model.vocabulary, host, port)
        try:
            for prefix in [(0,), (0, 1), (0, 2), (0, 1, 1)]:
                assert client.next_logprobs("", prefix) == model.next_logprobs("", prefix)
        finally:
            client.close()

    def test_decode_over_wire_bit_identical(self, served_tiny3, inp):
        model, (host, port) = served_tiny3
        client = RemoteScorer(model.vocabulary, host, port)
        try:
            cfg = DecodeConfig(beam_width=2, max_len=3, strategy="beam", mode="practical")
            remote = beam_decode(client, inp, cfg)
            local = beam_decode(model, inp, cfg)
            assert remote.best == local.best
            assert remote.final_beam == local.final_beam
            assert remote.scorer_calls == local.scorer_calls
        finally:
            client.close()

    def test_connect_failure_is_transport_error(self):
        model = make_tiny3()
        with pytest.raises(ScorerTransportError):
            RemoteScorer(model.vocabulary, "127.0.0.1", 1, timeout=0.2)


def _one_shot_server(reply_fn):
    """Accept one connection, answer each request line with reply_fn(request)."""
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    sock.listen(1)

    def run():
        conn, _ = sock.accept()
        f = conn.makefile("rwb")
        for line in f:
            request = json.loads(line)
            f.write(json.dumps(reply_fn(request)).encode() + b"\n")
            f.flush()
        conn.close()

    threading.Thread(target=run, daemon=True).start()
    return sock.getsockname()


class TestProtocolValidation:
    def setup_method(self):
        self.model = make_tiny3()

    def test_missing_token_rejected(self):
        def reply(req):
            return {"id": req["id"], "logprobs": {"a": -1.0, "</s>": -1.0}}

        host, port = _one_shot_server(reply)
        client = RemoteScorer(self.model.vocabulary, host, port)
        with pytest.raises(ScorerTransportError, match="missing token"):
            client.next_logprobs("", (0,))
        client.close()

    def test_unnormalized_row_rejected(self):
        import math

        def reply(req):
            lp = math.log(0.8 / 3)
            return {"id": req["id"], "logprobs": {"a": lp, "b": lp, "</s>": lp}}

        host, port = _one_shot_server(reply)
        client = RemoteScorer(self.model.vocabulary, host, port)
        with pytest.raises(ScorerTransportError, match="sums to"):
            client.next_logprobs("", (0,))
        client.close()

    def test_mismatched_id_rejected(self):
        import math

        def reply(req):
            lp = math.log(1 / 3)
            return {"id": req["id"] + 7, "logprobs": {"a": lp, "b": lp, "</s>": lp}}

        host, port = _one_shot_server(reply)
        client = RemoteScorer(self.model.vocabulary, host, port)
        with pytest.raises(ScorerTransportError, match="id"):
            client.next_logprobs("", (0,))
        client.close()

    def test_peer_close_is_transport_error(self):
        sock = socket.socket()
        sock.bind(("127.0.0.1", 0))
        sock.listen(1)

        def run():
            conn, _ = sock.accept()
            conn.close()

        threading.Thread(target=run, daemon=True).start()
        host, port = sock.getsockname()
        client = RemoteScorer(self.model.vocabulary, host, port)
        with pytest.raises(ScorerTransportError):
            client.next_logprobs("", (0,))
        client.close()

    def test_ids_echoed_in_order(self):
        seen = []

        def reply(req):
            seen.append(req["id"])
            row = self.model.next_logprobs("", tuple(
                self.model.vocabulary.tokens.index(t) for t in req["prefix"]))
            return {"id": req["id"],
                    "logprobs": {self.model.vocabulary.tokens[tid]: lp
                                 for tid, lp in row.items()}}

        host, port = _one_shot_server(reply)
        client = RemoteScorer(self.model.vocabulary, host, port)
        for _ in range(4):
            client.next_logprobs("", (0,))
        client.close()
        assert seen == [0, 1, 2, 3]
