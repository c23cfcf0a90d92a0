#!/usr/bin/env python3
"""Convert the BYU PCC Chit-Chat corpus into (message, reply) JSON-lines splits.

The corpus ships as a PyPI wheel (chitchat_dataset, MIT licensed). Pass either
the wheel or the extracted dataset.json. Consecutive turns of a conversation
become (context, reply) pairs; a turn is every message one speaker sends
before the other speaker answers. Text is lowercased and punctuation is split
off into separate tokens, the pre-tokenized style common to dialogue corpora.

The last conversations (in sorted-key order) form the held-out split so no
conversation contributes to both sides.
"""

import argparse
import json
import re
import sys
import zipfile
from pathlib import Path

PUNCT = re.compile(r"([.,!?;:()\"])")
SPACES = re.compile(r"\s+")


def clean(text):
    text = text.lower().replace("’", "'")
    text = PUNCT.sub(r" \1 ", text)
    return SPACES.sub(" ", text).strip()


def load(path):
    path = Path(path)
    if path.suffix == ".whl":
        with zipfile.ZipFile(path) as z:
            return json.loads(z.read("chitchat_dataset/dataset.json"))
    return json.loads(path.read_text(encoding="utf-8"))


def conversation_pairs(convo, max_context, max_reply):
    turns = [clean(" ".join(m["text"] for m in turn)) for turn in convo["messages"]]
    for ctx, rep in zip(turns, turns[1:]):
        nc, nr = len(ctx.split()), len(rep.split())
        if 0 < nc <= max_context and 0 < nr <= max_reply:
            yield ctx, rep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("source", help="chitchat_dataset wheel or dataset.json")
    ap.add_argument("--out-dir", default="data/chitchat")
    ap.add_argument("--train-pairs", type=int, default=51500)
    ap.add_argument("--test-pairs", type=int, default=2000)
    ap.add_argument("--max-context", type=int, default=64)
    ap.add_argument("--max-reply", type=int, default=24)
    args = ap.parse_args()

    data = load(args.source)
    keys = sorted(data)
    test, train = [], []
    for key in reversed(keys):
        if len(test) >= args.test_pairs:
            break
        test.extend(conversation_pairs(data[key], args.max_context, args.max_reply))
        keys.pop()
    test = test[: args.test_pairs]
    for key in keys:
        if len(train) >= args.train_pairs:
            break
        train.extend(conversation_pairs(data[key], args.max_context, args.max_reply))
    train = train[: args.train_pairs]

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, rows in (("train", train), ("test", test)):
        with open(out / f"{name}.jsonl", "w", encoding="utf-8") as fh:
            for ctx, rep in rows:
                fh.write(json.dumps({"context": ctx, "reply": rep}, ensure_ascii=False) + "\n")
        print(f"{name}: {len(rows)} pairs", file=sys.stderr)


if __name__ == "__main__":
    main()
