"""Freezes NLTK sentence BLEU (smoothing method 7, n-grams 1..3) on random
token-id pairs into tests/data/bleu_pairs.json."""

import json
import pathlib
import random
import sys

import nltk
from nltk.translate.bleu_score import SmoothingFunction, sentence_bleu


def random_sentence(rng, vocab, length):
    return [rng.randrange(4, 4 + vocab) for _ in range(length)]


def pairs(rng, count):
    out = []
    while len(out) < count:
        kind = len(out) % 5
        vocab = rng.choice([3, 6, 12, 40])
        hyp = random_sentence(rng, vocab, rng.randint(1, 14))
        if kind == 0:
            ref = list(hyp)
        elif kind == 1:
            ref = [t + 100 for t in random_sentence(rng, vocab, rng.randint(1, 14))]
        else:
            ref = random_sentence(rng, vocab, rng.randint(1, 14))
        out.append((hyp, ref))
    return out


def main(path):
    rng = random.Random(20180501)
    smoothing = SmoothingFunction().method7
    records = []
    for hyp, ref in pairs(rng, 200):
        score = sentence_bleu([ref], hyp, weights=(1 / 3, 1 / 3, 1 / 3),
                              smoothing_function=smoothing)
        records.append({"hypothesis": hyp, "reference": ref, "bleu": repr(float(score))})
    doc = {"nltk_version": nltk.__version__, "pairs": records}
    pathlib.Path(path).write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data/bleu_pairs.json")
