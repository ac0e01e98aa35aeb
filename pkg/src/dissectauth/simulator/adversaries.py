"""Adversarial credential generators for the traffic simulator.

Each generator yields candidate (secret, time_value) pairs for one campaign
against one account, driven by a seeded RNG for reproducibility.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Iterator

from .personas import _typo_for


class AdversaryKind(str, Enum):
    BRUTE_FORCE = "BruteForce"
    DICTIONARY = "Dictionary"
    CREDENTIAL_STUFFING = "CredentialStuffing"
    SHOULDER_SURFER = "ShoulderSurfer"
    SPRAYING = "Spraying"


@dataclass(frozen=True)
class AdversarySpec:
    kind: AdversaryKind
    attempt_budget: int = 100
    # knowledge per kind: BruteForce/Dictionary none; CredentialStuffing holds a
    # leaked variant of the real secret; ShoulderSurfer observed one submission
    # at a now-stale schedule step; Spraying holds a username list.
    guess_length: int = 10
    charset: str = string.ascii_lowercase + string.digits
    wordlist_path: str | None = None
    variant_distance: int = 1
    staleness_logins: int = 1
    spray_passwords: tuple[str, ...] = ("password", "123456", "qwerty1", "letmein")
    context_profile: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.attempt_budget < 1:
            raise ValueError("attempt_budget must be >= 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "AdversarySpec":
        doc = dict(doc)
        doc["kind"] = AdversaryKind(doc["kind"])
        if "spray_passwords" in doc:
            doc["spray_passwords"] = tuple(doc["spray_passwords"])
        return cls(**doc)


def bundled_wordlist() -> list[str]:
    raw = resources.files("dissectauth.data").joinpath("wordlist.txt").read_text("utf-8")
    return [line for line in raw.splitlines() if line]


def load_wordlist(spec: AdversarySpec) -> list[str]:
    if spec.wordlist_path:
        with open(spec.wordlist_path, encoding="utf-8") as fh:
            return [line.strip() for line in fh if line.strip()]
    return bundled_wordlist()


def brute_force_guesses(spec: AdversarySpec, rng: random.Random) -> Iterator[str]:
    while True:
        yield "".join(rng.choice(spec.charset) for _ in range(spec.guess_length))


def dictionary_guesses(spec: AdversarySpec, rng: random.Random) -> Iterator[str]:
    words = load_wordlist(spec)
    rng.shuffle(words)
    while True:
        yield from words


def mutate_secret(secret: str, distance: int, rng: random.Random) -> str:
    """A leaked-database variant: ``distance`` positions swapped for lookalikes."""
    chars = list(secret)
    positions = rng.sample(range(len(chars)), min(distance, len(chars)))
    for p in positions:
        chars[p] = _typo_for(chars[p], rng, ambient_bias=0.7)
    return "".join(chars)


def stuffing_guesses(spec: AdversarySpec, rng: random.Random, leaked: str) -> Iterator[str]:
    yield leaked
    while True:
        # small credential tweaks attackers try after the exact replay fails
        tweak = rng.random()
        if tweak < 0.4:
            yield mutate_secret(leaked, 1, rng)
        elif tweak < 0.6:
            yield leaked + rng.choice("0123456789")
        elif tweak < 0.8:
            yield leaked.capitalize()
        else:
            yield mutate_secret(leaked, 2, rng)


