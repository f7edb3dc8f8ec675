#!/usr/bin/env python3
"""Build the desk-scale corpus from the public-domain King James Bible.

Input is the verse JSON shipped in the `kjv` npm package
(json/verses-1769.json). Each verse becomes one tokenized sentence.
Genesis, Exodus and Leviticus are used; every 10th verse goes to test,
every 20th (offset 5) to dev, the rest to train.

    npm pack kjv && tar xzf kjv-1.0.0.tgz
    python3 tools/prepare_kjv.py package/json/verses-1769.json data/kjv
"""
import json
import os
import re
import sys

BOOKS = ("Genesis", "Exodus", "Leviticus")

_PUNCT = re.compile(r"([,;:.?!()\"])")
_POSSESSIVE = re.compile(r"(\w)('[sS])\b")


def tokenize(verse: str) -> str:
    text = verse.replace("[", "").replace("]", "")
    text = _PUNCT.sub(r" \1 ", text)
    text = _POSSESSIVE.sub(r"\1 \2", text)
    return " ".join(text.split())


def main() -> int:
    if len(sys.argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    with open(sys.argv[1], encoding="utf-8") as f:
        verses = json.load(f)
    splits = {"train": [], "dev": [], "test": []}
    i = 0
    for ref, text in verses.items():
        if ref.rsplit(" ", 1)[0] not in BOOKS:
            continue
        line = tokenize(text)
        if i % 10 == 0:
            splits["test"].append(line)
        elif i % 20 == 5:
            splits["dev"].append(line)
        else:
            splits["train"].append(line)
        i += 1
    os.makedirs(sys.argv[2], exist_ok=True)
    for name, lines in splits.items():
        with open(os.path.join(sys.argv[2], name + ".txt"), "w", encoding="utf-8", newline="\n") as f:
            f.write("\n".join(lines) + "\n")
        print(name, len(lines), "sentences", sum(len(l.split()) for l in lines), "tokens")
    return 0


if __name__ == "__main__":
    sys.exit(main())
