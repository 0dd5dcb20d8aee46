import json

import httpx
import pytest

from concept_cnn import load_embedding_table

from embed_extractor import Vocabulary, render_phrases
from embed_extractor.api_extract import extract_api_embeddings
from embed_extractor.errors import AuthError, DimensionError, QuotaError, ServiceError

from recorded import recorded_vector


@pytest.fixture
def phrases(mini_vocab_text):
    return render_phrases(Vocabulary.from_json(mini_vocab_text))


class FakeService:
    """Scriptable embeddings endpoint behind an httpx MockTransport."""

    def __init__(self, dim, fail_first=0, status=503, scramble=False):
        self.dim = dim
        self.fail_first = fail_first
        self.status = status
        self.scramble = scramble
        self.requests: list[dict] = []

    def transport(self) -> httpx.MockTransport:
        def handler(request: httpx.Request) -> httpx.Response:
            payload = json.loads(request.content)
            self.requests.append(payload)
            if self.fail_first > 0:
                self.fail_first -= 1
                return httpx.Response(self.status, text="transient blip")
            data = [
                {"index": i, "embedding": recorded_vector(text, self.dim)}
                for i, text in enumerate(payload["input"])
            ]
            if self.scramble:
                data = list(reversed(data))
            return httpx.Response(200, json={"data": data})

        return httpx.MockTransport(handler)


def no_sleep(_seconds: float) -> None:
    pass


def test_small_model_emits_1536_and_passes_core_loader(phrases, tmp_path, mini_vocab_text):
    service = FakeService(dim=1536, scramble=True)
    out = tmp_path / "openai_s.table"
    dim = extract_api_embeddings(
        "text-embedding-3-small", phrases, "test-key", out,
        transport=service.transport(), sleep=no_sleep,
    )
    assert dim == 1536
    table = load_embedding_table(out.read_text())
    assert table.dimension == 1536
    vocab = Vocabulary.from_json(mini_vocab_text)
    assert set(table.vectors) == set(vocab.pairs())
    # scrambled responses must be reassembled by index
    concept, label, text = phrases[0]
    assert table.vector(concept, label).tolist() == pytest.approx(recorded_vector(text, 1536))


def test_large_model_emits_3072(phrases, tmp_path):
    service = FakeService(dim=3072)
    out = tmp_path / "openai_l.table"
    extract_api_embeddings(
        "text-embedding-3-large", phrases, "test-key", out,
        transport=service.transport(), sleep=no_sleep,
    )
    assert load_embedding_table(out.read_text()).dimension == 3072


def test_requests_are_batched(phrases, tmp_path):
    service = FakeService(dim=64)
    extract_api_embeddings(
        "custom-model", phrases, "test-key", tmp_path / "t.table",
        batch_size=5, transport=service.transport(), sleep=no_sleep,
    )
    sizes = [len(r["input"]) for r in service.requests]
    assert sizes == [5, 5, 3]
    assert all(r["model"] == "custom-model" for r in service.requests)


def test_transient_failures_retry_with_backoff(phrases, tmp_path):
    service = FakeService(dim=32, fail_first=2, status=503)
    delays: list[float] = []
    extract_api_embeddings(
        "custom-model", phrases, "test-key", tmp_path / "t.table",
        transport=service.transport(), sleep=delays.append,
    )
    assert delays == [0.5, 1.0]


def test_gives_up_after_max_attempts_and_leaves_no_file(phrases, tmp_path):
    service = FakeService(dim=32, fail_first=99, status=500)
    out = tmp_path / "t.table"
    with pytest.raises(ServiceError, match="giving up after 3 attempts"):
        extract_api_embeddings(
            "custom-model", phrases, "test-key", out,
            max_attempts=3, transport=service.transport(), sleep=no_sleep,
        )
    assert not out.exists()
    assert not out.with_name(out.name + ".tmp").exists()


def test_auth_rejection_is_fatal(phrases, tmp_path):
    transport = httpx.MockTransport(lambda request: httpx.Response(401, text="bad key"))
    with pytest.raises(AuthError):
        extract_api_embeddings(
            "custom-model", phrases, "wrong-key", tmp_path / "t.table",
            transport=transport, sleep=no_sleep,
        )


def test_quota_exhaustion_is_fatal_not_retried(phrases, tmp_path):
    calls = []

    def handler(request):
        calls.append(request)
        return httpx.Response(429, json={"error": {"code": "insufficient_quota"}})

    with pytest.raises(QuotaError):
        extract_api_embeddings(
            "custom-model", phrases, "test-key", tmp_path / "t.table",
            transport=httpx.MockTransport(handler), sleep=no_sleep,
        )
    assert len(calls) == 1


def test_missing_credentials(phrases, tmp_path, monkeypatch):
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    with pytest.raises(AuthError, match="no API credentials"):
        extract_api_embeddings(
            "custom-model", phrases, None, tmp_path / "t.table", sleep=no_sleep,
        )


def test_credentials_from_environment(phrases, tmp_path, monkeypatch):
    monkeypatch.setenv("OPENAI_API_KEY", "env-key")
    seen = []

    def handler(request):
        seen.append(request.headers["authorization"])
        payload = json.loads(request.content)
        data = [
            {"index": i, "embedding": recorded_vector(t, 16)}
            for i, t in enumerate(payload["input"])
        ]
        return httpx.Response(200, json={"data": data})

    extract_api_embeddings(
        "custom-model", phrases, None, tmp_path / "t.table",
        transport=httpx.MockTransport(handler), sleep=no_sleep,
    )
    assert seen and all(h == "Bearer env-key" for h in seen)


def test_dimension_mismatch_rejected(phrases, tmp_path):
    service = FakeService(dim=100)  # expectation for the small model is 1536
    out = tmp_path / "t.table"
    with pytest.raises(DimensionError):
        extract_api_embeddings(
            "text-embedding-3-small", phrases, "test-key", out,
            transport=service.transport(), sleep=no_sleep,
        )
    assert not out.exists()
