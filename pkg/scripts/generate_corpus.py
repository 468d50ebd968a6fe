"""Generate the shipped sentiment corpus (data/sentiment_{train,dev}.tsv).

Templated binary movie reviews over the shared lexicon, built so the
label is carried by one or two sentiment words. The mix matters:

  easy    two strong carriers; survives a single-word edit
  medium  one strong carrier over neutral filler
  mixed   one strong carrier plus a mild word of the opposite polarity,
          labeled by the strong side; knocking out the carrier leaves a
          sentence that genuinely leans the other way
  mild    two mild carriers of the same side
  noun    the carrier is a polarized noun (gem, goof, ...)

Deterministic: fixed numpy seed, exact duplicates dropped, train and dev
kept disjoint with balanced labels.

Run: python3 scripts/generate_corpus.py
"""

from pathlib import Path

import numpy as np

import lexicon as lx

REPO = Path(__file__).resolve().parent.parent

TRAIN_PER_CLASS = 2000
DEV_PER_CLASS = 400
SEED = 7

ADVERB = ["very", "really", "quite", "truly"]


def pick(rng, pool):
    return pool[int(rng.integers(len(pool)))]


def pick2(rng, pool):
    i = int(rng.integers(len(pool)))
    j = int(rng.integers(len(pool) - 1))
    if j >= i:
        j += 1
    return pool[i], pool[j]


def easy(rng, strong):
    s1, s2 = pick2(rng, strong)
    n1, n2 = pick2(rng, lx.NEUTRAL_NOUN)
    forms = [
        ["the", n1, "is", s1, "and", s2],
        ["a", s1, "and", s2, n1],
        ["the", n1, "is", s1, "and", "the", n2, "is", s2],
        ["this", n1, "was", s1, "with", "a", s2, n2],
    ]
    return pick(rng, forms)


def medium(rng, strong):
    s = pick(rng, strong)
    n1, n2, n3 = (pick(rng, lx.NEUTRAL_NOUN) for _ in range(3))
    adv = pick(rng, ADVERB)
    forms = [
        ["the", n1, "is", adv, s],
        ["a", adv, s, n1],
        ["this", n1, "was", s],
        ["it", "is", "a", s, n1],
        ["the", n1, "of", "this", n2, "is", s],
        ["the", n1, "and", "the", n2, "of", "this", n3, "was", adv, s],
    ]
    return pick(rng, forms)


def mixed(rng, strong, mild_opposite):
    s = pick(rng, strong)
    m = pick(rng, mild_opposite)
    n1, n2 = pick2(rng, lx.NEUTRAL_NOUN)
    adv = pick(rng, ADVERB)
    hedge = pick(rng, ["somewhat", "rather"])
    forms = [
        ["the", n1, "is", s, "but", hedge, m],
        ["a", s, n1, "but", "a", m, n2],
        ["this", n1, "was", s, "and", hedge, m],
        ["the", n1, "is", adv, s, "but", "the", n2, "is", hedge, m],
    ]
    return pick(rng, forms)


def mild(rng, mild_pool):
    m1, m2 = pick2(rng, mild_pool)
    n1, n2 = pick2(rng, lx.NEUTRAL_NOUN)
    adv = pick(rng, ADVERB)
    forms = [
        ["the", n1, "is", m1, "and", m2],
        ["a", m1, n1, "with", m2, n2],
        ["the", n1, "is", m1, "and", "the", n2, "is", adv, m2],
    ]
    return pick(rng, forms)


def noun(rng, noun_pool):
    x = pick(rng, noun_pool)
    n1, n2 = pick2(rng, lx.NEUTRAL_NOUN)
    forms = [
        ["the", n1, "is", "a", x],
        ["it", "is", "a", x, "of", "a", n1],
        ["this", n1, "was", "a", x],
        ["the", n1, "of", "this", n2, "is", "a", x],
    ]
    return pick(rng, forms)


# (weight, builder(rng, label)) pairs; weights sum to 1 per class.
def sentence(rng, label):
    strong = lx.STRONG_POS if label == 1 else lx.STRONG_NEG
    mild_same = lx.MILD_POS if label == 1 else lx.MILD_NEG
    mild_opp = lx.MILD_NEG if label == 1 else lx.MILD_POS
    nouns = lx.POS_NOUN if label == 1 else lx.NEG_NOUN
    r = rng.random()
    if r < 0.22:
        words = easy(rng, strong)
    elif r < 0.54:
        words = medium(rng, strong)
    elif r < 0.74:
        words = mixed(rng, strong, mild_opp)
    elif r < 0.90:
        words = mild(rng, mild_same)
    else:
        words = noun(rng, nouns)
    return " ".join(words)


def main() -> None:
    rng = np.random.default_rng(SEED)
    need = {0: TRAIN_PER_CLASS + DEV_PER_CLASS, 1: TRAIN_PER_CLASS + DEV_PER_CLASS}
    seen: set[str] = set()
    by_label: dict[int, list[str]] = {0: [], 1: []}
    while need[0] or need[1]:
        label = int(rng.integers(2))
        if not need[label]:
            continue
        text = sentence(rng, label)
        if text in seen:
            continue
        seen.add(text)
        by_label[label].append(text)
        need[label] -= 1

    out = REPO / "data"
    out.mkdir(exist_ok=True)
    train, dev = [], []
    for label in (0, 1):
        train += [(t, label) for t in by_label[label][:TRAIN_PER_CLASS]]
        dev += [(t, label) for t in by_label[label][TRAIN_PER_CLASS:]]
    # Interleave labels so any prefix subset stays roughly balanced.
    train = [ex for pair in zip(train[: len(train) // 2], train[len(train) // 2 :]) for ex in pair]
    dev = [ex for pair in zip(dev[: len(dev) // 2], dev[len(dev) // 2 :]) for ex in pair]
    for name, rows in (("sentiment_train.tsv", train), ("sentiment_dev.tsv", dev)):
        path = out / name
        path.write_text(
            "".join(f"{text}\t{label}\n" for text, label in rows), encoding="utf-8"
        )
        print(f"wrote {path} ({len(rows)} examples)")


if __name__ == "__main__":
    main()
