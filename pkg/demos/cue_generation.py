import json
import os

from cuehoi.config import CueClientConfig, EncoderConfig, FusionConfig
from cuehoi.cues import CueCache, CueEncoder, ImageRef, build_client, encode_cues, generate_cues

IMAGE_ID = "girl_bedroom"
# Point this at a real picture to ask a live model; the bundled fixture answers otherwise.
IMAGE_PATH = os.getenv("CUEHOI_DEMO_IMAGE")
CACHE_PATH = "results/demo_cues.jsonl"


async def describe_and_print(image: ImageRef, config: CueClientConfig) -> None:
    """Asks for the three cues of one image and prints them with the encoded shapes."""
    print(f"\n>>> Generating cues for '{image.image_id}' (mode={config.mode}, backend={config.backend})")

    client = build_client(config)
    cache = CueCache(CACHE_PATH) if config.mode == "live" else None
    cues = await generate_cues(image, client, cache)

    print(f"<<< Provenance: {cues.provenance}")
    print(json.dumps(cues.cache_record(), indent=2))

    encoder = CueEncoder.build(FusionConfig(), EncoderConfig())
    features = encode_cues(cues, encoder)
    for kind in features.kinds:
        print(f"--- {kind}: {tuple(features[kind].shape)} token features")
    print("-" * 30)


async def main():
    mode = "live" if IMAGE_PATH else "fixture"
    config = CueClientConfig(mode=mode)
    image = ImageRef(image_id=IMAGE_ID, path=IMAGE_PATH)
    await describe_and_print(image, config)


if __name__ == "__main__":
    import asyncio

    asyncio.run(main())
