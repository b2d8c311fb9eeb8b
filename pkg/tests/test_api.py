import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import pytest

from rei.api import ApiConfig, HttpBackend, complete_prompt, max_tokens_for, request_body
from rei.engine import GenerationConfig, generate_with_rejection
from rei.errors import AuthMissing, HttpError, RequestTimeout
from rei.expr import parse_document
from rei.prompt import Demonstration

GOLDEN = Path(__file__).parent / "golden"
TOKEN_ENV = "REI_TEST_TOKEN"


class Stub:
    """Local completion endpoint replaying a list of (status, body) replies."""

    def __init__(self, replies, delay=0.0):
        self.replies = list(replies)
        self.requests = []
        self.delay = delay
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                body = self.rfile.read(int(self.headers["Content-Length"]))
                stub.requests.append((self.path, dict(self.headers), body))
                if stub.delay:
                    import time

                    time.sleep(stub.delay)
                status, payload = stub.replies.pop(0) if len(stub.replies) > 1 else stub.replies[0]
                data = payload.encode() if isinstance(payload, str) else json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self.server = HTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.server.server_port}/v1"
        threading.Thread(target=self.server.serve_forever, daemon=True).start()

    def close(self):
        self.server.shutdown()
        self.server.server_close()


def ok(text):
    return 200, {"choices": [{"text": text}]}


@pytest.fixture
def token(monkeypatch):
    monkeypatch.setenv(TOKEN_ENV, "sk-test")


def api_for(stub, **kw):
    return ApiConfig(base_url=stub.url, auth_token_env=TOKEN_ENV, backoff=0.01, **kw)


def test_golden_request_body():
    prompt = '{"input": "<expression> <mask_0> <length=10> </expression>", "output": "'
    body = request_body(prompt, GenerationConfig(), ApiConfig(), max_tokens=30)
    assert body == (GOLDEN / "request_body.json").read_bytes()


def test_max_tokens_budget():
    api = ApiConfig()
    assert max_tokens_for(parse_document("<expression> <mask_0> <length=6> </expression>"), api) == 18
    assert max_tokens_for(parse_document("<expression> <mask_0> </expression>"), api) == api.max_tokens


def test_echo(token):
    stub = Stub([ok("canned completion")])
    try:
        assert complete_prompt("hi", GenerationConfig(), api_for(stub)) == "canned completion"
        path, headers, body = stub.requests[0]
        assert path == "/v1/completions"
        assert headers["Authorization"] == "Bearer sk-test"
        assert json.loads(body)["stop"] == ['"}']
    finally:
        stub.close()


def test_retries_server_errors(token):
    stub = Stub([(500, "{}"), (500, "{}"), ok("third time")])
    try:
        assert complete_prompt("hi", GenerationConfig(), api_for(stub, transport_retries=2)) == "third time"
        assert len(stub.requests) == 3
    finally:
        stub.close()


def test_retries_exhausted(token):
    stub = Stub([(503, "busy")])
    try:
        with pytest.raises(HttpError) as e:
            complete_prompt("hi", GenerationConfig(), api_for(stub, transport_retries=1))
        assert e.value.status == 503
        assert len(stub.requests) == 2
    finally:
        stub.close()


def test_client_error_not_retried(token):
    stub = Stub([(400, "bad")])
    try:
        with pytest.raises(HttpError):
            complete_prompt("hi", GenerationConfig(), api_for(stub))
        assert len(stub.requests) == 1
    finally:
        stub.close()


def test_timeout(token):
    stub = Stub([ok("late")], delay=0.5)
    try:
        with pytest.raises(RequestTimeout):
            complete_prompt("hi", GenerationConfig(), api_for(stub, request_timeout=0.1, transport_retries=0))
    finally:
        stub.close()


def test_missing_token_makes_no_request(monkeypatch):
    monkeypatch.delenv(TOKEN_ENV, raising=False)
    stub = Stub([ok("x")])
    try:
        with pytest.raises(AuthMissing):
            complete_prompt("hi", GenerationConfig(), api_for(stub))
        assert stub.requests == []
    finally:
        stub.close()


def test_backend_end_to_end(token):
    query = parse_document("<expression> <mask_0> dog(0) <mask_1> </expression>")
    demos = [
        Demonstration.from_realization(parse_document(f"<expression> <mask_0> {w}(0) <mask_1> </expression>"), f"a {w} here")
        for w in ("cat", "cow")
    ]
    stub = Stub([ok("<expression> bad </expression>"), ok('<expression> the dog(0) barked </expression>"}')])
    try:
        backend = HttpBackend(api_for(stub), demos, shots=2)
        log = generate_with_rejection(query, backend, GenerationConfig.api())
        assert log.accepted == "the dog barked"
        assert log.tries_used == 2
        sent = json.loads(stub.requests[0][2])
        assert sent["prompt"].count("\n") == 2
        assert sent["max_tokens"] == 256
    finally:
        stub.close()
