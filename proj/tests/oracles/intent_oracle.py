#!/usr/bin/env python3
"""Reference token-overlap scorer, written independently of the C++ classifier.

Scores the paraphrase set against data/corpus/nlu.yml and prints the table that
is frozen into tests/unit/intent_test.cpp and the acceptance suite.
"""
import re
import sys
from pathlib import Path

import yaml

ORDER = [
    "snag_assist", "cannot_resolve", "confirm_fixed", "abort_task", "more_gentle",
    "speed_ok", "report_pain", "pause_dressing", "resume_dressing", "start_dressing",
    "emergency_stop", "auto_recover",
]

# (utterance, intended intent)
PARAPHRASES = [
    ("could you slow down a little", "more_gentle"),
    ("please be a bit more gentle", "more_gentle"),
    ("can you go slower please", "more_gentle"),
    ("reduce the speed please", "more_gentle"),
    ("yes I can help you with that", "snag_assist"),
    ("let me fix it", "snag_assist"),
    ("I will adjust it for you", "snag_assist"),
    ("sorry I cannot fix this", "cannot_resolve"),
    ("it is still stuck on my elbow", "cannot_resolve"),
    ("I am unable to free it", "cannot_resolve"),
    ("ok the snag is fixed now", "confirm_fixed"),
    ("done, the garment is free", "confirm_fixed"),
    ("I fixed the snag, please resume", "confirm_fixed"),
    ("please abort the task", "abort_task"),
    ("stop the dressing now", "abort_task"),
    ("cancel the dressing please", "abort_task"),
    ("yes that is much better", "speed_ok"),
    ("this speed is fine thanks", "speed_ok"),
    ("ow that hurts", "report_pain"),
    ("my arm hurts a lot", "report_pain"),
    ("the sleeve is too tight", "report_pain"),
    ("pause for a second", "pause_dressing"),
    ("hold on please", "pause_dressing"),
    ("please resume", "resume_dressing"),
    ("continue the dressing please", "resume_dressing"),
    ("ok I am ready now", "start_dressing"),
    ("emergency stop now", "emergency_stop"),
    ("try to fix it yourself", "auto_recover"),
    ("resolve it autonomously please", "auto_recover"),
    ("you can keep going like this", "speed_ok"),
]

CANONICAL = [
    ("I can help with the snag", "snag_assist"),
    ("Let me fix the snag", "snag_assist"),
    ("I will adjust the garment", "snag_assist"),
    ("Stop the dressing", "abort_task"),
    ("Abort the task", "abort_task"),
    ("End the process", "abort_task"),
    ("Slow down", "more_gentle"),
    ("Be gentle", "more_gentle"),
    ("Can you reduce the speed", "more_gentle"),
]


def tokens(text):
    seen = []
    for tok in re.split(r"[^0-9a-z]+", text.lower()):
        if tok and tok not in seen:
            seen.append(tok)
    return seen


def score(text, examples):
    t = set(tokens(text))
    best = 0.0
    for ex in examples:
        e = tokens(ex)
        if e:
            best = max(best, len(t.intersection(e)) / len(e))
    return best


def classify(text, corpus):
    best_intent, best = "unknown", 0.0
    for name in ORDER:
        s = score(text, corpus.get(name, []))
        if s > best:
            best_intent, best = name, s
    return (best_intent if best >= 0.5 else "unknown"), best


def load(path):
    doc = yaml.safe_load(Path(path).read_text())
    corpus = {}
    for block in doc["nlu"]:
        lines = [l.strip() for l in block["examples"].splitlines() if l.strip()]
        corpus[block["intent"]] = [l[1:].strip() for l in lines]
    return corpus


def main():
    root = Path(__file__).resolve().parents[2]
    corpus = load(root / "data/corpus/nlu.yml")
    correct = 0
    for text, want in CANONICAL + PARAPHRASES:
        got, s = classify(text, corpus)
        print(f'{{"{text}", "{want}", "{got}", {s:.6f}}},')
        if (text, want) in PARAPHRASES and got == want:
            correct += 1
    print(f"paraphrase accuracy: {correct}/{len(PARAPHRASES)}", file=sys.stderr)


if __name__ == "__main__":
    main()
