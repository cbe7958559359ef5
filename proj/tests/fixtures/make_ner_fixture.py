"""Writes the NER, tagging and classification scorer fixtures.

The NER golden report comes from the Python port of conlleval, the reference
scorer for CoNLL-style chunking; seqeval supplies an independent overall F1.
"""

import json
import random
import sys
from pathlib import Path

sys.path.insert(0, sys.argv[1] if len(sys.argv) > 1 else "/tmp/ce")
from conlleval.conlleval import evaluate, report  # noqa: E402
from seqeval.metrics import f1_score  # noqa: E402

here = Path(__file__).parent
rng = random.Random(7)
types = ["PER", "LOC", "ORG"]
words = "Tallinn Tartu Jaan Mari Eesti Pank ja on see linn kool ülikool kevadel".split()


def random_tags(n):
    tags, i = [], 0
    while i < n:
        if rng.random() < 0.4:
            t = rng.choice(types)
            span = rng.randint(1, 3)
            for k in range(span):
                if i < n:
                    tags.append(("B-" if k == 0 else "I-") + t)
                    i += 1
        else:
            tags.append("O")
            i += 1
    return tags


def corrupt(tags):
    out = list(tags)
    for i in range(len(out)):
        r = rng.random()
        if r < 0.08:
            out[i] = "O"
        elif r < 0.14:
            out[i] = "B-" + rng.choice(types)
        elif r < 0.18 and out[i] != "O":
            out[i] = "I-" + rng.choice(types)
    return out


sentences = []
for _ in range(40):
    n = rng.randint(3, 12)
    gold = random_tags(n)
    sentences.append([(rng.choice(words), g, p) for g, p in zip(gold, corrupt(gold))])

lines = []
for s in sentences:
    lines.extend(f"{w} {g} {p}" for w, g, p in s)
    lines.append("")
(here / "ner" / "predictions.txt").write_text("\n".join(lines), encoding="utf-8")

(here / "ner" / "conlleval_expected.txt").write_text(report(evaluate(lines)), encoding="utf-8")
f1 = f1_score([[g for _, g, _ in s] for s in sentences], [[p for _, _, p in s] for s in sentences])
(here / "ner" / "seqeval_f1.txt").write_text(f"{100 * f1:.10f}\n", encoding="utf-8")

# Tagging: 5 sequences, 2 of 15 tags wrong.
tag_lines = ["Tere INTJ INTJ", "maailm NOUN NOUN", "", "Ta PRON PRON", "läks VERB VERB", "koju ADV NOUN", "",
             "See PRON DET", "on AUX AUX", "hea ADJ ADJ", "raamat NOUN NOUN", "", "Jah INTJ INTJ", "",
             "Mari PROPN PROPN", "loeb VERB VERB", "ja CCONJ CCONJ", "kirjutab VERB VERB", "palju ADV ADV", ""]
(here / "ner" / "tags.txt").write_text("\n".join(tag_lines), encoding="utf-8")

# Classification: 7 of 9 correct.
cls = ["pos pos", "neg neg", "neu neg", "pos pos", "neg neg", "neu neu", "pos neu", "neg neg", "pos pos"]
(here / "ner" / "labels.txt").write_text("\n".join(cls) + "\n", encoding="utf-8")
