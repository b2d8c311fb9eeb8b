"""Completion-API backend.

Wire format (POST ``{base_url}/completions``, JSON body, keys sorted)::

    {"max_tokens": 30, "model": "...", "prompt": "...", "stop": ["\\"}"],
     "temperature": 0.7, "top_p": 0.95}

The response's ``choices[0].text`` is the completion.  The token is read
from the environment variable named by ``ApiConfig.auth_token_env``.
"""

from __future__ import annotations

import json
import logging
import os
import socket
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass

from .engine import GenerationConfig, Request
from .errors import AuthMissing, HttpError, RequestTimeout, UnterminatedCompletion
from .expr import Document
from .prompt import DEFAULT_SHOTS, STOP, build_fewshot_prompt, parse_completion

log = logging.getLogger(__name__)

RETRY_STATUS = {429, 500, 502, 503, 504}


@dataclass(frozen=True)
class ApiConfig:
    base_url: str = "https://api.openai.com/v1"
    model_name: str = "text-davinci-003"
    auth_token_env: str = "OPENAI_API_KEY"
    request_timeout: float = 60.0
    transport_retries: int = 2
    backoff: float = 1.0  # seconds before the first retry, doubled each time
    tokens_per_word: int = 3
    max_tokens: int = 256  # cap when no length constraint applies
    max_in_flight: int = 4

    @property
    def endpoint(self) -> str:
        return self.base_url.rstrip("/") + "/completions"


def request_body(prompt: str, cfg: GenerationConfig, api: ApiConfig, max_tokens: int, stop: str = STOP) -> bytes:
    payload = {
        "model": api.model_name,
        "prompt": prompt,
        "temperature": cfg.temperature,
        "top_p": cfg.top_p,
        "max_tokens": max_tokens,
        "stop": [stop],
    }
    return json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")


def max_tokens_for(doc: Document | None, api: ApiConfig) -> int:
    if doc is not None and doc.expr.length is not None:
        return doc.expr.length * api.tokens_per_word
    return api.max_tokens


def complete_prompt(
    prompt: str,
    cfg: GenerationConfig,
    api: ApiConfig,
    *,
    max_tokens: int | None = None,
    stop: str = STOP,
) -> str:
    token = os.environ.get(api.auth_token_env)
    if not token:
        raise AuthMissing(f"environment variable {api.auth_token_env} is not set")
    body = request_body(prompt, cfg, api, api.max_tokens if max_tokens is None else max_tokens, stop)
    headers = {"Content-Type": "application/json", "Authorization": f"Bearer {token}"}
    for attempt in range(api.transport_retries + 1):
        last = attempt == api.transport_retries
        req = urllib.request.Request(api.endpoint, data=body, headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=api.request_timeout) as resp:
                data = json.loads(resp.read().decode("utf-8"))
            return data["choices"][0]["text"]
        except urllib.error.HTTPError as e:
            detail = e.read().decode("utf-8", "replace")
            if e.code not in RETRY_STATUS or last:
                raise HttpError(e.code, detail) from e
            log.warning("HTTP %s from %s, retrying", e.code, api.endpoint)
        except (socket.timeout, TimeoutError) as e:
            if last:
                raise RequestTimeout(f"no response within {api.request_timeout}s") from e
        except urllib.error.URLError as e:
            if isinstance(e.reason, (socket.timeout, TimeoutError)):
                if last:
                    raise RequestTimeout(f"no response within {api.request_timeout}s") from e
            else:
                raise HttpError(0, str(e.reason)) from e
        except (KeyError, IndexError, ValueError) as e:
            raise HttpError(200, f"unexpected response shape: {e}") from e
        time.sleep(api.backoff * 2**attempt)
    raise AssertionError("unreachable")


class HttpBackend:
    """Few-shot prompting against a completion API.

    Demonstrations are picked per request by expression structure.
    """

    supports_beam = False
    concurrent_safe = True

    def __init__(self, api: ApiConfig, demos, shots: int = DEFAULT_SHOTS):
        self.api = api
        self.demos = list(demos)
        self.shots = shots
        self._slots = threading.BoundedSemaphore(api.max_in_flight)

    def prompt_for(self, doc: Document) -> str:
        return build_fewshot_prompt(doc, self.demos, self.shots)

    def produce(self, request: Request) -> str:
        prompt = self.prompt_for(request.doc)
        with self._slots:
            text = complete_prompt(prompt, request.config, self.api, max_tokens=max_tokens_for(request.doc, self.api))
        # the API usually drops the stop sequence itself
        for candidate in (text, text + STOP):
            try:
                return parse_completion(candidate)
            except UnterminatedCompletion:
                pass
        return text
