import json
import math
import random
import threading
import time

import httpx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adl_llm.errors import CacheMissError, ConfigurationError, TransportError
from adl_llm.llm_client import (
    CachingClient,
    HttpLLMClient,
    LLMConfig,
    LocalEmbedder,
    MemoEmbedder,
    MockLLMClient,
    ReplayCache,
    complete_many,
    make_client,
    prompt_hash,
)
from adl_llm.prompting import PromptBundle


def bundle(user="window text", system="sys"):
    return PromptBundle(system=system, user=user)


def chat_body(content):
    return {"choices": [{"message": {"role": "assistant", "content": content}}]}


def http_client(handler, cfg=None, sleeps=None):
    cfg = cfg or LLMConfig(endpoint_url="http://llm.test/v1")
    http = httpx.Client(transport=httpx.MockTransport(handler))
    return HttpLLMClient(cfg, http=http, api_key="k",
                         sleep=(sleeps.append if sleeps is not None else lambda s: None),
                         rng=random.Random(0))


def test_mock_keyed_on_prompt_hash():
    b = bundle("some window")
    client = MockLLMClient({prompt_hash(b.user): "{eating}"})
    r = client.complete(b)
    assert r.content == "{eating}"
    assert r.from_cache and r.latency == 0.0


def test_mock_miss_without_default():
    with pytest.raises(CacheMissError):
        MockLLMClient({}).complete(bundle())
    assert MockLLMClient({}, default="{x}").complete(bundle()).content == "{x}"
    assert MockLLMClient({}, default=lambda b: b.user.upper()).complete(bundle("ab")).content == "AB"


def test_mock_from_file(tmp_path):
    p = tmp_path / "mock.json"
    p.write_text(json.dumps({prompt_hash("u"): "{sleeping}"}))
    assert MockLLMClient.from_file(p).complete(bundle("u")).content == "{sleeping}"


def test_http_request_shape():
    seen = {}

    def handler(request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json=chat_body("{relaxing}"))

    r = http_client(handler).complete(bundle("u", "s"))
    assert r.content == "{relaxing}" and not r.from_cache
    assert seen["url"] == "http://llm.test/v1/chat/completions"
    assert seen["auth"] == "Bearer k"
    assert seen["body"]["messages"] == [{"role": "system", "content": "s"},
                                        {"role": "user", "content": "u"}]
    assert seen["body"]["temperature"] == 0.0


def test_http_embeddings():
    def handler(request):
        assert request.url.path == "/v1/embeddings"
        return httpx.Response(200, json={"data": [{"embedding": [0.5, 0.5, 0.0]}]})

    assert http_client(handler).embed("x").values == (0.5, 0.5, 0.0)


def test_retries_429_then_succeeds():
    calls = []
    sleeps = []

    def handler(request):
        calls.append(1)
        if len(calls) <= 2:
            return httpx.Response(429, text="slow down")
        return httpx.Response(200, json=chat_body("{ok}"))

    assert http_client(handler, sleeps=sleeps).complete(bundle()).content == "{ok}"
    assert len(calls) == 3
    assert len(sleeps) == 2
    # jittered exponential: attempt k waits in [base*2^k/2, base*2^k]
    assert 0.5 <= sleeps[0] <= 1.0 and 1.0 <= sleeps[1] <= 2.0


def test_retry_after_header_wins():
    calls = []
    sleeps = []

    def handler(request):
        calls.append(1)
        if len(calls) == 1:
            return httpx.Response(503, headers={"Retry-After": "7"})
        return httpx.Response(200, json=chat_body("{ok}"))

    http_client(handler, sleeps=sleeps).complete(bundle())
    assert sleeps == [7.0]


def test_transport_errors_are_retried():
    calls = []

    def handler(request):
        calls.append(1)
        if len(calls) == 1:
            raise httpx.ConnectError("refused", request=request)
        return httpx.Response(200, json=chat_body("{ok}"))

    assert http_client(handler).complete(bundle()).content == "{ok}"


def test_exhausted_retries_raise():
    cfg = LLMConfig(endpoint_url="http://llm.test/v1", max_retries=2)
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(500)

    with pytest.raises(TransportError):
        http_client(handler, cfg).complete(bundle())
    assert len(calls) == 3


def test_client_error_not_retried():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(401, text="bad key")

    with pytest.raises(TransportError, match="401"):
        http_client(handler).complete(bundle())
    assert len(calls) == 1


def test_malformed_body():
    with pytest.raises(TransportError):
        http_client(lambda r: httpx.Response(200, json={"nope": 1})).complete(bundle())


def test_config_validation():
    for kwargs in ({"parallelism": 0}, {"max_retries": -1}, {"timeout": 0}):
        with pytest.raises(ConfigurationError):
            LLMConfig(**kwargs)


def test_record_then_replay(tmp_path):
    cfg = LLMConfig()
    path = tmp_path / "cache.jsonl"
    inner = MockLLMClient({prompt_hash("u"): "{sleeping}"})
    recorder = CachingClient(inner, ReplayCache(path), cfg, record=True)
    first = recorder.complete(bundle("u"))
    emb = recorder.embed("hello")
    assert first.content == "{sleeping}"

    lines = [json.loads(l) for l in path.read_text().splitlines()]
    assert {l["kind"] for l in lines} == {"chat", "embedding"}
    for l in lines:
        assert {"key", "kind", "latency", "recorded_at"} <= set(l)

    replay = CachingClient(None, ReplayCache(path), cfg)
    again = replay.complete(bundle("u"))
    assert again.content == "{sleeping}" and again.from_cache
    assert replay.embed("hello") == emb
    assert inner.calls == 1


def test_strict_replay_miss(tmp_path):
    replay = CachingClient(None, ReplayCache(tmp_path / "c.jsonl"), LLMConfig())
    with pytest.raises(CacheMissError):
        replay.complete(bundle())
    with pytest.raises(CacheMissError):
        replay.embed("x")


def test_replay_key_depends_on_model_and_prompt(tmp_path):
    path = tmp_path / "c.jsonl"
    CachingClient(MockLLMClient(default="{a}"), ReplayCache(path), LLMConfig(), record=True
                  ).complete(bundle("u"))
    with pytest.raises(CacheMissError):
        CachingClient(None, ReplayCache(path), LLMConfig(model="other")).complete(bundle("u"))
    with pytest.raises(CacheMissError):
        CachingClient(None, ReplayCache(path), LLMConfig()).complete(bundle("u", "other"))


def test_cache_is_append_only_and_first_wins(tmp_path):
    cache = ReplayCache(tmp_path / "c.jsonl")
    cache.put("k", "chat", content="a")
    cache.put("k", "chat", content="b")
    assert ReplayCache(tmp_path / "c.jsonl").get("k")["content"] == "a"
    assert len((tmp_path / "c.jsonl").read_text().splitlines()) == 1


def test_make_client_stacks(tmp_path):
    assert isinstance(make_client(LLMConfig(), mock=True), MockLLMClient)
    strict = make_client(LLMConfig(), replay=tmp_path / "c.jsonl")
    assert isinstance(strict, CachingClient) and strict.inner is None


def test_local_embed_deterministic_unit_norm():
    e = LocalEmbedder()
    a, b = e.embed("They open the fridge door."), e.embed("They open the fridge door.")
    assert a == b
    assert a.dim == 256
    assert abs(math.sqrt(sum(v * v for v in a.values)) - 1) <= 1e-9


def test_local_embed_case_and_space_insensitive():
    e = LocalEmbedder()
    assert e.embed("Watching  TV") == e.embed("watching tv")


@pytest.mark.parametrize("text", ["", "   ", "\n"])
def test_embed_rejects_empty(text):
    with pytest.raises(ValueError):
        LocalEmbedder().embed(text)


@given(st.text(min_size=1).filter(str.strip))
def test_local_embed_norm_property(text):
    v = LocalEmbedder().embed(text).values
    assert abs(math.fsum(x * x for x in v) - 1) <= 1e-9


def test_memo_embedder_calls_inner_once():
    counter = []

    class Counting:
        tag = "c"

        def embed(self, text):
            counter.append(text)
            return LocalEmbedder().embed(text)

    memo = MemoEmbedder(Counting())
    assert memo.embed("a b") == memo.embed("a b")
    assert counter == ["a b"]


def test_parallelism_is_transparent():
    bundles = [bundle(f"window {i}") for i in range(40)]
    lock = threading.Lock()
    active = [0, 0]

    class Slow:
        def complete(self, b):
            with lock:
                active[0] += 1
                active[1] = max(active[1], active[0])
            time.sleep(0.002)
            with lock:
                active[0] -= 1
            return MockLLMClient(default=lambda x: "{" + x.user + "}").complete(b)

    serial = complete_many(Slow(), bundles, 1)
    active[1] = 0
    parallel = complete_many(Slow(), bundles, 8)
    assert serial == parallel
    assert [r.content for r in parallel] == ["{" + b.user + "}" for b in bundles]
    assert active[1] > 1
