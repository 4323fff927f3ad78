import asyncio
import json

import httpx
import pytest

from cuehoi.config import CUE_KINDS, CueClientConfig
from cuehoi.cues import (
    CueCache,
    CueSet,
    FixtureCueClient,
    HttpCueClient,
    ImageRef,
    LiteLLMCueClient,
    build_client,
    build_prompt,
    generate_all,
    generate_cues,
    load_prompt_templates,
    read_cue_records,
    synthesize_cues,
)
from cuehoi.data import resource_path
from cuehoi.exceptions import ConfigError, CueGenerationError, MissingCuesError
from cuehoi.utils import check_tag_presence, extract_tag_content, normalize_cue_text

ENDPOINT = "http://vlm.test/describe"


class FlakyServer:
    """Answers every prompt, after `failures` 503 replies per (image, kind)."""

    def __init__(self, failures=0, status=503, reject=()):
        self.failures = failures
        self.status = status
        self.reject = set(reject)
        self.calls = []

    def __call__(self, request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content)
        key = (body["image_ref"], body["kind"])
        self.calls.append(key)
        if body["image_ref"] in self.reject:
            return httpx.Response(400, text="bad image")
        if self.calls.count(key) <= self.failures:
            return httpx.Response(self.status, text="busy")
        return httpx.Response(200, json={"text": f"<answer> {body['kind']}  of {body['image_ref']} </answer>"})


def _client(server, retries=2):
    return HttpCueClient(ENDPOINT, token="t", retries=retries, backoff=0.0, transport=httpx.MockTransport(server))


class TestTextUtils:
    def test_extracts_tagged_answer(self):
        assert extract_tag_content("x <answer>a</answer> y <answer>b</answer>", "answer") == "a\nb"
        assert extract_tag_content("nothing", "answer") is None

    def test_tag_presence(self):
        assert check_tag_presence("<done/>", "done")
        assert not check_tag_presence("done", "done")

    def test_normalize(self):
        assert normalize_cue_text("Answer:  a  person\n riding ") == "a person riding"
        assert normalize_cue_text("noise <answer>\n the bedroom </answer>") == "the bedroom"


class TestPrompts:
    def test_bundled_templates_cover_every_kind(self):
        templates = load_prompt_templates()
        assert templates.version == 1
        assert set(templates.prompts) == set(CUE_KINDS)

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            build_prompt("weather")

    def test_custom_file_missing_kind(self, tmp_path):
        path = tmp_path / "prompts.toml"
        path.write_text('version = 2\n[prompts]\nparticipant = "who?"\n')
        with pytest.raises(ConfigError):
            load_prompt_templates(path)


class TestCueSet:
    def test_empty_text_only_for_fixtures(self):
        fixture = CueSet(image_id="a", participant="", body_language="b", environmental="c", provenance="fixture")
        assert fixture.degenerate
        with pytest.raises(ValueError):
            CueSet(image_id="a", participant="", body_language="b", environmental="c", provenance="live")

    def test_bundled_bedroom_example(self):
        cues = FixtureCueClient.from_file(resource_path("fixture_cues.jsonl")).cues_for("girl_bedroom")
        assert "tablet" in cues.participant
        assert "legs crossed" in cues.body_language
        assert "bedroom" in cues.environmental

    def test_fixture_client_unknown_image(self):
        client = FixtureCueClient({})
        with pytest.raises(CueGenerationError):
            client.cues_for("nope")

    def test_synthesized_cues_name_the_objects(self, fixture_dataset):
        registry, annotations = fixture_dataset
        cues = synthesize_cues(registry, annotations[2])
        assert cues.provenance == "fixture"
        assert "bicycle" in cues.participant and "sports ball" in cues.participant
        assert "kick the sports ball" in cues.body_language


class TestHttpClient:
    def test_retries_on_5xx_then_succeeds(self):
        server = FlakyServer(failures=2)
        text = asyncio.run(_client(server).describe(ImageRef(image_id="img"), build_prompt("participant")))
        assert text.strip().startswith("<answer>")
        assert server.calls.count(("img", "participant")) == 3

    def test_gives_up_after_retries(self):
        server = FlakyServer(failures=10)
        with pytest.raises(CueGenerationError):
            asyncio.run(_client(server, retries=1).describe(ImageRef(image_id="img"), build_prompt("participant")))
        assert len(server.calls) == 2

    def test_4xx_is_not_retried(self):
        server = FlakyServer(reject={"img"})
        with pytest.raises(CueGenerationError) as info:
            asyncio.run(_client(server).describe(ImageRef(image_id="img"), build_prompt("participant")))
        assert len(server.calls) == 1
        assert info.value.raw_payload == "bad image"

    def test_malformed_reply_keeps_payload(self):
        transport = httpx.MockTransport(lambda request: httpx.Response(200, text="not json"))
        client = HttpCueClient(ENDPOINT, retries=0, transport=transport)
        with pytest.raises(CueGenerationError) as info:
            asyncio.run(client.describe(ImageRef(image_id="img"), build_prompt("environmental")))
        assert info.value.raw_payload == "not json"

    def test_sends_image_bytes_when_file_exists(self, tmp_path):
        image = tmp_path / "a.png"
        image.write_bytes(b"\x89PNG fake")
        seen = {}

        def handler(request):
            seen.update(json.loads(request.content))
            return httpx.Response(200, json={"text": "ok"})

        client = HttpCueClient(ENDPOINT, transport=httpx.MockTransport(handler))
        asyncio.run(client.describe(ImageRef(image_id="a", path=str(image)), build_prompt("participant")))
        assert seen["mime_type"] == "image/png"
        assert "image_ref" not in seen


class TestGeneration:
    def test_mock_server_populates_cache(self, tmp_path):
        server = FlakyServer(failures=1)
        cache_path = tmp_path / "cues.jsonl"
        images = [ImageRef(image_id=f"img{i}") for i in range(3)]

        report = asyncio.run(generate_all(images, _client(server), CueCache(cache_path), max_in_flight=2))

        assert list(report.cues) == ["img0", "img1", "img2"]
        assert report.provenance_counts == {"live": 3, "cache": 0, "fixture": 0}
        assert report.cues["img1"].body_language == "body_language of img1"
        assert len(server.calls) == 3 * len(CUE_KINDS) * 2
        records = list(read_cue_records(cache_path))
        assert sorted(r["image_id"] for r in records) == ["img0", "img1", "img2"]
        assert len(CueCache(cache_path)) == 3

    def test_cache_hits_skip_the_server(self, tmp_path):
        cache_path = tmp_path / "cues.jsonl"
        images = [ImageRef(image_id="img0")]
        asyncio.run(generate_all(images, _client(FlakyServer()), CueCache(cache_path)))

        server = FlakyServer()
        report = asyncio.run(generate_all(images, _client(server), CueCache(cache_path)))
        assert server.calls == []
        assert report.cues["img0"].provenance == "cache"

    def test_failures_are_collected(self):
        server = FlakyServer(reject={"bad"})
        images = [ImageRef(image_id="good"), ImageRef(image_id="bad")]
        report = asyncio.run(generate_all(images, _client(server)))
        assert list(report.cues) == ["good"]
        assert list(report.failures) == ["bad"]
        with pytest.raises(MissingCuesError) as info:
            report.raise_for_missing()
        assert info.value.missing == ["bad"]

    def test_empty_reply_is_an_error(self):
        transport = httpx.MockTransport(lambda request: httpx.Response(200, json={"text": "<answer> </answer>"}))
        client = HttpCueClient(ENDPOINT, retries=0, transport=transport)
        with pytest.raises(CueGenerationError):
            asyncio.run(generate_cues(ImageRef(image_id="x"), client))

    def test_cache_only_miss(self):
        with pytest.raises(CueGenerationError):
            asyncio.run(generate_cues(ImageRef(image_id="x"), None, CueCache()))


class TestBuildClient:
    def test_fixture_mode_defaults_to_bundled_cues(self):
        client = build_client(CueClientConfig(mode="fixture"))
        assert "fx_001" in client

    def test_cache_mode_has_no_client(self):
        with pytest.raises(ConfigError):
            build_client(CueClientConfig(mode="cache"))

    def test_live_http_needs_endpoint(self):
        with pytest.raises(ConfigError):
            build_client(CueClientConfig(mode="live", endpoint=None))

    def test_live_litellm(self):
        client = build_client(CueClientConfig(mode="live", backend="litellm", model="openai/gpt-4o-mini"))
        assert isinstance(client, LiteLLMCueClient)

    def test_token_is_not_dumped(self):
        config = CueClientConfig(mode="live", endpoint=ENDPOINT, token="secret")
        assert "token" not in config.model_dump()
        assert isinstance(build_client(config), HttpCueClient)
