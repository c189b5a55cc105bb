"""Reference answer EM/F1 vectors.

normalize_answer and f1_score below follow the widely used multi-hop QA
evaluation script verbatim. Pairs whose gold and prediction both normalize
to nothing are left out: the reference divides by zero-length token lists
there and reports 0, which the Rust port does not replicate.
"""
import json
import random
import re
import string
from collections import Counter


def normalize_answer(s):
    def remove_articles(text):
        return re.sub(r"\b(a|an|the)\b", " ", text)

    def white_space_fix(text):
        return " ".join(text.split())

    def remove_punc(text):
        exclude = set(string.punctuation)
        return "".join(ch for ch in text if ch not in exclude)

    def lower(text):
        return text.lower()

    return white_space_fix(remove_articles(remove_punc(lower(s))))


def f1_score(prediction, ground_truth):
    normalized_prediction = normalize_answer(prediction)
    normalized_ground_truth = normalize_answer(ground_truth)

    ZERO_METRIC = (0, 0, 0)

    if normalized_prediction in ["yes", "no", "noanswer"] and normalized_prediction != normalized_ground_truth:
        return ZERO_METRIC
    if normalized_ground_truth in ["yes", "no", "noanswer"] and normalized_prediction != normalized_ground_truth:
        return ZERO_METRIC

    prediction_tokens = normalized_prediction.split()
    ground_truth_tokens = normalized_ground_truth.split()
    common = Counter(prediction_tokens) & Counter(ground_truth_tokens)
    num_same = sum(common.values())
    if num_same == 0:
        return ZERO_METRIC
    precision = 1.0 * num_same / len(prediction_tokens)
    recall = 1.0 * num_same / len(ground_truth_tokens)
    f1 = (2 * precision * recall) / (precision + recall)
    return f1, precision, recall


def exact_match_score(prediction, ground_truth):
    return normalize_answer(prediction) == normalize_answer(ground_truth)


WORDS = [
    "the", "a", "an", "The", "A", "Paris", "paris", "France", "1932", "2003",
    "Mask", "of", "Fu", "Manchu", "Blind", "Shaft", "Li", "Yang", "yes", "no",
    "Yes", "NO", "noanswer", "film", "director", "river", "Delhi", "Oberoi",
    "Group", "Arthur's", "Magazine", "First", "for", "Women", "Thea", "anthem",
    "Zürich", "café", "Ångström", "naïve", "théâtre", "U.S.", "St.", "1,000",
    "3.14", "co-star", "self-made", "#1", "50%", "$5", "(film)", "\"quoted\"",
    "A.B.C.", "an.", "the,", "--", "...", "?", "!",
]
SEPARATORS = [" ", " ", " ", "  ", "\t", "\n", " ", " ", "\u001c", " , ", "-", ""]


def phrase(rng, max_words=6):
    n = rng.randint(1, max_words)
    out = []
    for i in range(n):
        if i:
            out.append(rng.choice(SEPARATORS))
        out.append(rng.choice(WORDS))
    return "".join(out)


def mutate(rng, s):
    ops = [
        lambda x: x.upper(),
        lambda x: x.lower(),
        lambda x: "The " + x,
        lambda x: x + ".",
        lambda x: " ".join(x.split()[::-1]),
        lambda x: x + " " + rng.choice(WORDS),
        lambda x: " ".join(x.split()[1:]) or x,
        lambda x: x.replace(" ", "  "),
        lambda x: "(" + x + ")",
        lambda x: x,
    ]
    return rng.choice(ops)(s)


def main():
    rng = random.Random(20240601)
    fixed = [
        ("The Mask Of Fu Manchu", "The Mask of Fu Manchu"),
        ("Blind Shaft", "The Mask of Fu Manchu"),
        ("yes", "yes"), ("Yes.", "yes"), ("no", "yes"), ("yes", "yes it is"),
        ("noanswer", "no answer"), ("the the a", "Paris"), ("Paris", "a"),
        ("Paris Paris France", "Paris France France"),
        ("1,000", "1000"), ("U.S.", "US"), ("Zürich", "zürich"),
        ("café", "CAFÉ"), ("Ångström unit", "ångström"),
        ("an apple", "apple"), ("theater", "the ater"),
        ("Li Yang", "Li Yang"), ("Li\u001cYang", "Li Yang"),
        ("Li Yang", "Li Yang"), ("co-star", "costar"),
    ]
    pairs = list(fixed)
    while len(pairs) < 200:
        gold = phrase(rng)
        pred = mutate(rng, gold) if rng.random() < 0.6 else phrase(rng)
        if rng.random() < 0.5:
            gold, pred = pred, gold
        if normalize_answer(gold) == "" and normalize_answer(pred) == "":
            continue
        pairs.append((pred, gold))
    vectors = []
    for pred, gold in pairs:
        f1, p, r = f1_score(pred, gold)
        vectors.append({
            "prediction": pred,
            "gold": gold,
            "em": 1.0 if exact_match_score(pred, gold) else 0.0,
            "f1": float(f1),
            "precision": float(p),
            "recall": float(r),
        })
    with open("answer_vectors.json", "w", encoding="utf-8") as fh:
        json.dump(vectors, fh, ensure_ascii=False, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    main()
