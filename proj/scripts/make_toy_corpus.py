"""Writes the bundled toy corpus: every question admits answers from three
templates with disjoint vocabularies, chosen uniformly at random."""

import pathlib
import random
import sys

TOPICS = ["tea", "coffee", "jazz", "rain", "chess", "hiking", "movies", "cats",
          "trains", "soup", "winter", "books"]
QUESTIONS = ["do you like {} ?", "what about {} ?", "how do you feel about {} ?"]
TEMPLATES = [
    "yes i really enjoy {} a lot",
    "no {} is boring to me",
    "maybe ask me about {} later",
]


def dialogue(rng):
    topic = rng.choice(TOPICS)
    question = rng.choice(QUESTIONS).format(topic)
    answer = rng.choice(TEMPLATES).format(topic)
    return f"{question} __eou__ {answer} __eou__"


def main(out_dir):
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(7)
    for name, count in [("train", 600), ("valid", 60), ("test", 60)]:
        lines = [dialogue(rng) for _ in range(count)]
        (out / f"{name}.txt").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/toy")
