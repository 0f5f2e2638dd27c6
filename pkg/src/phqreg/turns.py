"""Behavioral characteristics from the transcript: a 12-dim vector.

Three sub-groups:
    NB (3)   laughter frequency, disfluency percentage, inconvenience-cue count
    TB (6)   Q1/median/Q3 of response time and of within-speaker pause (seconds)
    PDI (3)  diagnosed-before flags for ptsd / depression / military background,
             each encoded -1 (never asked), 0 (denied) or 1 (confirmed)
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Speaker, TurnRecord

BEHAVIORAL_NAMES = (
    "nb_laughter_freq", "nb_disfluency_pct", "nb_inconvenience",
    "tb_resp_q1", "tb_resp_med", "tb_resp_q3",
    "tb_pause_q1", "tb_pause_med", "tb_pause_q3",
    "pdi_ptsd", "pdi_dep", "pdi_mb",
)

PDI_TOPICS = ("ptsd", "dep", "mb")


@dataclass(frozen=True)
class Lexicons:
    """Token/phrase sets driving NB and PDI extraction; all lowercase."""

    disfluencies: frozenset[str] = frozenset({"um", "uh", "er", "mm", "mhm", "hmm", "uh-huh"})
    inconvenience_cues: frozenset[str] = frozenset(
        {"<sigh>", "<whistling>", "<whisper>", "<deep_breath>", "<mumble>", "<clears_throat>"}
    )
    affirmations: tuple[str, ...] = ("yes", "yeah", "yep", "i have", "i do")
    negations: tuple[str, ...] = ("no", "nope", "never", "i haven't", "i don't")
    topic_keywords: dict = field(
        default_factory=lambda: {
            "ptsd": ("ptsd", "post traumatic"),
            "dep": ("depress",),
            "mb": ("military", "served", "deployment"),
        }
    )


DEFAULT_LEXICONS = Lexicons()


def load_lexicons(path) -> Lexicons:
    """Read lexicons from an INI file; missing keys fall back to the defaults.

    Format: whitespace-separated tokens, commas separating multi-word phrases::

        [lexicons]
        disfluencies = um uh er
        affirmations = yes, yeah, i have
        topic.dep = depress
    """
    cp = configparser.ConfigParser()
    cp.read_string(Path(path).read_text(encoding="utf-8"))
    sec = cp["lexicons"]

    def tokens(key, default):
        if key not in sec:
            return default
        return frozenset(sec[key].lower().split())

    def phrases(key, default):
        if key not in sec:
            return default
        return tuple(p.strip() for p in sec[key].lower().split(",") if p.strip())

    topics = dict(DEFAULT_LEXICONS.topic_keywords)
    for topic in PDI_TOPICS:
        key = f"topic.{topic}"
        if key in sec:
            topics[topic] = phrases(key, ())
    return Lexicons(
        disfluencies=tokens("disfluencies", DEFAULT_LEXICONS.disfluencies),
        inconvenience_cues=tokens("inconvenience_cues", DEFAULT_LEXICONS.inconvenience_cues),
        affirmations=phrases("affirmations", DEFAULT_LEXICONS.affirmations),
        negations=phrases("negations", DEFAULT_LEXICONS.negations),
        topic_keywords=topics,
    )


def nonvocal_features(turns, lexicons: Lexicons = DEFAULT_LEXICONS) -> np.ndarray:
    """Laughter frequency, disfluency percentage, inconvenience-cue count."""
    participant = [t for t in turns if t.speaker is Speaker.PARTICIPANT]
    if not participant:
        raise ValueError("no participant turns")
    tokens = [tok.lower() for t in participant for tok in t.text]

    laughter = sum(tok == "<laughter>" for tok in tokens) / len(participant)
    n_disf = sum(tok in lexicons.disfluencies or tok == "<disfluency>" for tok in tokens)
    disf_pct = 100.0 * n_disf / len(tokens) if tokens else 0.0
    cues = float(sum(tok in lexicons.inconvenience_cues for tok in tokens))
    return np.array([laughter, disf_pct, cues])


def _quartiles(values) -> np.ndarray:
    if not values:
        return np.zeros(3)
    return np.percentile(np.asarray(values, dtype=np.float64), [25.0, 50.0, 75.0], method="linear")


def turn_taking_features(turns) -> np.ndarray:
    """Q1/median/Q3 of response times and of within-speaker pauses.

    Response time: participant turn start minus the immediately preceding
    agent turn stop, clamped at 0. Pause: gap between consecutive participant
    turns with no agent turn in between, clamped at 0. An empty observation
    set yields a zero triple.
    """
    turns = list(turns)
    responses, pauses = [], []
    for prev, cur in zip(turns, turns[1:]):
        if cur.speaker is not Speaker.PARTICIPANT:
            continue
        gap = max(cur.start - prev.stop, 0.0)
        if prev.speaker is Speaker.AGENT:
            responses.append(gap)
        else:
            pauses.append(gap)
    return np.concatenate([_quartiles(responses), _quartiles(pauses)])


def _contains_phrase(tokens: list[str], phrase: str) -> bool:
    want = phrase.split()
    return any(tokens[i : i + len(want)] == want for i in range(len(tokens) - len(want) + 1))


def _topic_in_turn(turn: TurnRecord, keywords) -> bool:
    tokens = [tok.lower() for tok in turn.text]
    for kw in keywords:
        if " " in kw:
            if _contains_phrase(tokens, kw):
                return True
        elif any(tok.startswith(kw) for tok in tokens):
            return True
    return False


def pdi_features(turns, lexicons: Lexicons = DEFAULT_LEXICONS) -> tuple[np.ndarray, list[str]]:
    """PDI flags in PDI_TOPICS order plus a list of ambiguous-answer diagnostics.

    For each topic: -1 if no agent turn mentions it; otherwise the first
    participant turn after the first mentioning agent turn is classified with
    the negation lexicon (0) then the affirmation lexicon (1). An answer
    matching neither counts as -1 and is reported.
    """
    turns = list(turns)
    flags = {}
    diagnostics = []
    for topic in PDI_TOPICS:
        flags[topic] = -1.0
        asked_at = None
        for i, t in enumerate(turns):
            if t.speaker is Speaker.AGENT and _topic_in_turn(t, lexicons.topic_keywords[topic]):
                asked_at = i
                break
        if asked_at is None:
            continue
        answer = next((t for t in turns[asked_at + 1 :] if t.speaker is Speaker.PARTICIPANT), None)
        if answer is None:
            diagnostics.append(f"{topic}: query has no participant answer")
            continue
        tokens = [tok.lower() for tok in answer.text]
        if any(_contains_phrase(tokens, p) if " " in p else p in tokens for p in lexicons.negations):
            flags[topic] = 0.0
        elif any(_contains_phrase(tokens, p) if " " in p else p in tokens for p in lexicons.affirmations):
            flags[topic] = 1.0
        else:
            diagnostics.append(f"{topic}: ambiguous answer {' '.join(tokens)!r}")
    return np.array([flags[t] for t in PDI_TOPICS]), diagnostics


def behavioral_vector(turns, lexicons: Lexicons = DEFAULT_LEXICONS) -> tuple[tuple[str, ...], np.ndarray]:
    """The full 12-dim behavioral vector with its feature names."""
    nb = nonvocal_features(turns, lexicons)
    tb = turn_taking_features(turns)
    pdi, _ = pdi_features(turns, lexicons)
    return BEHAVIORAL_NAMES, np.concatenate([nb, tb, pdi])
