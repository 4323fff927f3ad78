"""Vision-language model clients that turn (image, prompt) into cue text."""

from __future__ import annotations

import abc
import asyncio
import base64
import json
import logging
import mimetypes
from pathlib import Path
from typing import Any, Optional, Union

import httpx
import litellm
from litellm import ChatCompletionImageUrlObject, ChatCompletionTextObject, ChatCompletionUserMessage

from cuehoi.config import CueClientConfig
from cuehoi.cues.cache import read_cue_records
from cuehoi.cues.prompts import CuePrompt
from cuehoi.cues.schema import CueSet, ImageRef
from cuehoi.data.registry import resource_path
from cuehoi.exceptions import ConfigError, CueGenerationError, DataError

logger = logging.getLogger(__name__)


def _encode_image(path: Union[str, Path]) -> tuple[str, str]:
    path = Path(path)
    mime_type, _ = mimetypes.guess_type(path.name)
    data = path.read_bytes()
    return base64.b64encode(data).decode("utf-8"), mime_type or "application/octet-stream"


class CueClient(abc.ABC):
    """Asks a vision-language model one prompt about one image."""

    provenance = "live"

    @abc.abstractmethod
    async def describe(self, image: ImageRef, prompt: CuePrompt) -> str:
        """Returns the raw text the model produced for `prompt` on `image`."""


class HttpCueClient(CueClient):
    """Plain JSON endpoint: POST {image_ref | image_base64, prompt} -> {text}.

    Timeouts, transport failures and 5xx replies are retried with exponential backoff
    capped at `backoff_max`; 4xx replies and malformed bodies fail immediately.
    """

    def __init__(
        self,
        endpoint: str,
        token: Optional[str] = None,
        timeout: float = 30.0,
        retries: int = 3,
        backoff: float = 0.5,
        backoff_max: float = 8.0,
        transport: Optional[httpx.AsyncBaseTransport] = None,
    ):
        self.endpoint = endpoint
        self.token = token
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.backoff_max = backoff_max
        self._transport = transport

    def _payload(self, image: ImageRef, prompt: CuePrompt) -> dict[str, Any]:
        payload: dict[str, Any] = {"prompt": prompt.template, "kind": prompt.kind}
        if image.path and Path(image.path).is_file():
            payload["image_base64"], payload["mime_type"] = _encode_image(image.path)
        else:
            payload["image_ref"] = image.path or image.image_id
        return payload

    def _delay(self, attempt: int) -> float:
        return min(self.backoff_max, self.backoff * (2**attempt))

    async def describe(self, image: ImageRef, prompt: CuePrompt) -> str:
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        payload = self._payload(image, prompt)
        last_error = ""
        for attempt in range(self.retries + 1):
            if attempt:
                delay = self._delay(attempt - 1)
                logger.warning(
                    "Retrying %s cue for %s (attempt %d/%d) in %.2fs: %s",
                    prompt.kind, image.image_id, attempt + 1, self.retries + 1, delay, last_error,
                )
                await asyncio.sleep(delay)
            try:
                async with httpx.AsyncClient(transport=self._transport, timeout=self.timeout) as client:
                    response = await client.post(self.endpoint, json=payload, headers=headers)
                response.raise_for_status()
            except httpx.HTTPStatusError as e:
                if e.response.status_code < 500:
                    raise CueGenerationError(
                        f"HTTP {e.response.status_code} from VLM endpoint",
                        image_id=image.image_id,
                        raw_payload=e.response.text,
                    ) from e
                last_error = f"HTTP {e.response.status_code}"
                continue
            except httpx.RequestError as e:
                last_error = f"{type(e).__name__}: {e}"
                continue
            return self._parse(response, image)
        raise CueGenerationError(
            f"VLM endpoint failed after {self.retries + 1} attempt(s): {last_error}",
            image_id=image.image_id,
        )

    @staticmethod
    def _parse(response: httpx.Response, image: ImageRef) -> str:
        raw = response.text
        logger.debug("VLM reply for %s: %d bytes", image.image_id, len(raw))
        try:
            body = response.json()
        except json.JSONDecodeError as e:
            raise CueGenerationError("VLM reply is not JSON", image_id=image.image_id, raw_payload=raw) from e
        if not isinstance(body, dict) or not isinstance(body.get("text"), str):
            raise CueGenerationError(
                "VLM reply has no string 'text' field", image_id=image.image_id, raw_payload=raw
            )
        return body["text"]


class LiteLLMCueClient(CueClient):
    """Routes the prompt and the image (as a data URI) through `litellm.acompletion`."""

    def __init__(
        self,
        model: str,
        api_key: Optional[str] = None,
        api_base: Optional[str] = None,
        timeout: float = 30.0,
        retries: int = 3,
    ):
        self.model = model
        self.api_key = api_key
        self.api_base = api_base
        self.timeout = timeout
        self.retries = retries

    def _messages(self, image: ImageRef, prompt: CuePrompt) -> list[ChatCompletionUserMessage]:
        if not image.path or not Path(image.path).is_file():
            raise CueGenerationError("no local image file to send", image_id=image.image_id)
        data, mime_type = _encode_image(image.path)
        content = [
            ChatCompletionTextObject(type="text", text=prompt.template),
            ChatCompletionImageUrlObject(type="image_url", image_url=f"data:{mime_type};base64,{data}"),
        ]
        return [ChatCompletionUserMessage(role="user", content=content)]

    async def describe(self, image: ImageRef, prompt: CuePrompt) -> str:
        messages = self._messages(image, prompt)
        try:
            response = await litellm.acompletion(
                model=self.model,
                messages=messages,
                api_key=self.api_key,
                api_base=self.api_base,
                timeout=self.timeout,
                num_retries=self.retries,
            )
        except Exception as e:
            raise CueGenerationError(f"litellm call failed: {e}", image_id=image.image_id) from e
        try:
            text = response.choices[0].message.content
        except (AttributeError, IndexError) as e:
            raise CueGenerationError(
                "completion has no message content", image_id=image.image_id, raw_payload=str(response)
            ) from e
        if not isinstance(text, str):
            raise CueGenerationError(
                "completion content is not text", image_id=image.image_id, raw_payload=str(response)
            )
        return text


class FixtureCueClient:
    """Serves pre-written cues from a JSON-lines file keyed by image id."""

    provenance = "fixture"

    def __init__(self, cues: dict[str, CueSet]):
        self._cues = cues

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "FixtureCueClient":
        return cls({r["image_id"]: CueSet.from_record(r, "fixture") for r in read_cue_records(path)})

    def __contains__(self, image_id: str) -> bool:
        return image_id in self._cues

    def cues_for(self, image_id: str) -> CueSet:
        try:
            cues = self._cues[image_id]
        except KeyError:
            raise CueGenerationError("no fixture cues", image_id=image_id) from None
        if cues.degenerate:
            logger.warning("Fixture cues for %s contain an empty text", image_id)
        return cues


def build_client(config: CueClientConfig) -> Union[CueClient, FixtureCueClient]:
    """Creates the client selected by `config.mode` / `config.backend`.

    Fixture mode reads `config.fixture_path`, or the bundled fixture cues when unset.
    """
    if config.mode == "cache":
        raise ConfigError("cue mode 'cache' reads the cache only and has no client")
    if config.mode == "fixture":
        try:
            return FixtureCueClient.from_file(config.fixture_path or resource_path("fixture_cues.jsonl"))
        except DataError as e:
            raise ConfigError(str(e)) from e
    if config.backend == "litellm":
        if not config.model:
            raise ConfigError("litellm backend needs a model (CUEHOI_VLM_MODEL)")
        return LiteLLMCueClient(
            model=config.model,
            api_key=config.token,
            api_base=config.endpoint,
            timeout=config.timeout,
            retries=config.retries,
        )
    if not config.endpoint:
        raise ConfigError("live cue generation needs an endpoint (CUEHOI_VLM_ENDPOINT)")
    return HttpCueClient(
        endpoint=config.endpoint,
        token=config.token,
        timeout=config.timeout,
        retries=config.retries,
        backoff=config.backoff,
        backoff_max=config.backoff_max,
    )
