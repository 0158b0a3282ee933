"""Prompt construction for the text-to-image generator.

Seven prefix schemes; each prompt is a prefix immediately followed by the
category name. The bare-word prefixes ("a", "one", first rows of a5/one5)
carry a separating space so "a" + "bus" reads "a bus".
"""
from __future__ import annotations

from enum import Enum


class PromptScheme(str, Enum):
    NONE = "none"
    A = "a"
    ONE = "one"
    A5 = "a5"
    ONE5 = "one5"
    REAL = "real"
    ADJ = "adj"


PREFIXES: dict[PromptScheme, list[str]] = {
    PromptScheme.NONE: [""],
    PromptScheme.A: ["a "],
    PromptScheme.ONE: ["one "],
    PromptScheme.A5: [
        "a ",
        "a photo of ",
        "a photo of a ",
        "a picture of ",
        "a picture of a ",
    ],
    PromptScheme.ONE5: [
        "one ",
        "a photo of one ",
        "a picture of one ",
        "one photo of ",
        "one picture of ",
    ],
    PromptScheme.REAL: [
        "real ",
        "a real ",
        "one real ",
        "a photo of a real ",
        "a photo of one real ",
    ],
    PromptScheme.ADJ: [
        "a photo of a good ",
        "a photo of a large ",
        "a photo of a nice ",
        "a photo of a cool ",
        "a photo of a clean ",
    ],
}


def generate_prompts(category: str, scheme: PromptScheme) -> list[str]:
    """One prompt per prefix; the NONE scheme yields the bare name."""
    if not category:
        raise ValueError("category must be non-empty")
    return [prefix + category for prefix in PREFIXES[scheme]]
