from .cache import CueCache, read_cue_records, write_cue_records
from .clients import CueClient, FixtureCueClient, HttpCueClient, LiteLLMCueClient, build_client
from .encoder import (
    PAD_ID,
    CueEncoder,
    CueEncoderLayer,
    CueFeatures,
    HashTokenEmbedder,
    encode_cues,
    hash_token,
    token_ids,
    tokenize,
)
from .generation import CueReport, generate_all, generate_cues
from .prompts import CuePrompt, PromptTemplates, build_prompt, load_prompt_templates
from .schema import CueSet, ImageRef
from .synthetic import synthesize_all, synthesize_cues

__all__ = [
    "PAD_ID",
    "CueCache",
    "CueClient",
    "CueEncoder",
    "CueEncoderLayer",
    "CueFeatures",
    "CuePrompt",
    "CueReport",
    "CueSet",
    "FixtureCueClient",
    "HashTokenEmbedder",
    "HttpCueClient",
    "ImageRef",
    "LiteLLMCueClient",
    "PromptTemplates",
    "build_client",
    "build_prompt",
    "encode_cues",
    "generate_all",
    "generate_cues",
    "hash_token",
    "load_prompt_templates",
    "read_cue_records",
    "synthesize_all",
    "synthesize_cues",
    "token_ids",
    "tokenize",
    "write_cue_records",
]
