import re
import unicodedata
from typing import List

_TOKEN = re.compile(r"[a-z0-9]+(?:'[a-z]+)?")


def normalize_text(text: str) -> str:
    """
    Lowercase and fold accented characters to their ASCII base letters
    """
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch)).lower()


def tokenize(text: str) -> List[str]:
    """Split on whitespace and punctuation after normalization"""
    return _TOKEN.findall(normalize_text(text))
