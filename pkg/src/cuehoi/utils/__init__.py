from .text import check_tag_presence, extract_tag_content, normalize_cue_text

__all__ = ["check_tag_presence", "extract_tag_content", "normalize_cue_text"]
