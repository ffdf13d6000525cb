#!/usr/bin/env python3
"""Writes a canonical corpus whose span/summary counts match the published split statistics."""
import argparse
import json
import random

LABELS = ["INFORMATION", "CAUSE", "SUGGESTION", "QUESTION", "EXPERIENCE"]

# threads, then (spans, summaries) per label in LABELS order
TARGETS = {
    "train": (2533, [(4823, 1961), (646, 342), (4128, 1547), (325, 249), (1439, 845)]),
    "val": (317, [(643, 246), (108, 49), (549, 208), (42, 32), (170, 108)]),
    "test": (317, [(631, 242), (81, 45), (499, 188), (44, 31), (181, 100)]),
}

WORDS = {
    "INFORMATION": ["symptoms", "condition", "typically", "known", "clinical", "levels"],
    "CAUSE": ["because", "due", "triggered", "reason", "caused", "stress"],
    "SUGGESTION": ["recommend", "advise", "should", "consider", "consult", "rest"],
    "QUESTION": ["why", "what", "wondering", "whether", "unclear", "curious"],
    "EXPERIENCE": ["personally", "felt", "tried", "noticed", "helped", "remember"],
}
ANCHORS = {
    "INFORMATION": "for information purposes",
    "CAUSE": "some of the causes",
    "SUGGESTION": "it is suggested",
    "QUESTION": "it is inquired",
    "EXPERIENCE": "in user's experience",
}


def plan_split(rng, n_threads, counts):
    """Returns per thread a dict label -> number of spans; labels present carry a summary."""
    remaining = {l: s for l, (_, s) in zip(LABELS, counts)}
    threads = [dict() for _ in range(n_threads)]
    # every thread gets one summary label first
    for t in threads:
        pool = [l for l in LABELS if remaining[l] > 0]
        weights = [remaining[l] for l in pool]
        label = rng.choices(pool, weights)[0]
        t[label] = 1
        remaining[label] -= 1
    for label in LABELS:
        candidates = [t for t in threads if label not in t]
        rng.shuffle(candidates)
        if remaining[label] > len(candidates):
            raise SystemExit(f"cannot place {remaining[label]} {label} summaries")
        for t in candidates[: remaining[label]]:
            t[label] = 1
    for label, (spans, summaries) in zip(LABELS, counts):
        owners = [t for t in threads if label in t]
        assert len(owners) == summaries
        for _ in range(spans - summaries):
            rng.choice(owners)[label] += 1
    return threads


def build_thread(rng, tid, plan):
    span_labels = [l for l, k in plan.items() for _ in range(k)]
    rng.shuffle(span_labels)
    n_answers = rng.randint(1, min(4, len(span_labels)))
    owner = sorted(list(range(n_answers)) + [rng.randrange(n_answers) for _ in range(len(span_labels) - n_answers)])
    answers = [""] * n_answers
    spans = []
    for label, a in zip(span_labels, owner):
        text = " ".join(rng.choice(WORDS[label]) for _ in range(rng.randint(3, 6)))
        prefix = answers[a] + (" " if answers[a] else "")
        start = len(prefix)
        answers[a] = prefix + text + " ."
        spans.append({"answer_idx": a, "start": start, "end": start + len(text), "label": label})
    summaries = {}
    for label in LABELS:
        if label in plan:
            summaries[label] = ANCHORS[label] + " " + " ".join(rng.choice(WORDS[label]) for _ in range(4)) + " ."
    return {
        "id": tid,
        "question": "question " + tid + " ?",
        "category": "Other - Health",
        "answers": answers,
        "spans": spans,
        "summaries": summaries,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True, help="corpus JSONL")
    ap.add_argument("--splits", required=True, help="split assignment JSON")
    ap.add_argument("--seed", type=int, default=3167)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    records, assignment = [], {}
    for split, (n, counts) in TARGETS.items():
        assignment[split] = []
        for i, plan in enumerate(plan_split(rng, n, counts)):
            tid = f"{split}-{i:04d}"
            records.append(build_thread(rng, tid, plan))
            assignment[split].append(tid)
    with open(args.out, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, separators=(",", ":")) + "\n")
    with open(args.splits, "w", encoding="utf-8") as f:
        json.dump(assignment, f)
        f.write("\n")


if __name__ == "__main__":
    main()
