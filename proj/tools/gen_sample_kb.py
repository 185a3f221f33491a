#!/usr/bin/env python3
"""Generates data/sample_kb.json: a small arithmetic curriculum whose question
bank is produced from parametric templates with computed answers.

usage: gen_sample_kb.py [--per-cell N] [--seed S] [--out PATH]
"""

import argparse
import json
import random
from fractions import Fraction
from math import gcd

DIFFICULTIES = ("easy", "medium", "hard")
WEIGHT = {"easy": 1, "medium": 2, "hard": 3}
METHODS = ("film", "dynamic_view", "game", "puzzle", "text")


def distractors(rng, correct, spread, count=3, floor=None):
    out = set()
    while len(out) < count:
        delta = rng.randint(1, spread) * rng.choice((-1, 1))
        cand = correct + delta
        if floor is not None and cand < floor:
            continue
        if cand != correct:
            out.add(cand)
    return list(out)


def multiple_choice(rng, correct, wrong):
    choices = [str(correct)] + [str(w) for w in wrong]
    rng.shuffle(choices)
    return choices, choices.index(str(correct))


# ---------------------------------------------------------------------------
# Templates: (rng, difficulty) -> (body, correct, wrong answers)

def digit_value(rng, d):
    digits = {"easy": 2, "medium": 4, "hard": 6}[d]
    n = rng.randint(10 ** (digits - 1), 10 ** digits - 1)
    s = str(n)
    pos = rng.randrange(len(s))
    while s[pos] == "0":
        pos = rng.randrange(len(s))
    place = 10 ** (len(s) - 1 - pos)
    value = int(s[pos]) * place
    wrong = {int(s[pos]) * p for p in (place * 10, place // 10 if place >= 10 else place * 100, place * 100)}
    wrong.discard(value)
    wrong = list(wrong)[:3]
    while len(wrong) < 3:
        wrong.append(value + len(wrong) + 1)
    return f"What is the value of the digit {s[pos]} in {n}?", value, wrong


def rounding(rng, d):
    to = {"easy": 10, "medium": 100, "hard": 1000}[d]
    n = rng.randint(to + 1, to * 100 - 1)
    if n % to == 0:
        n += 1
    value = (n + to // 2) // to * to
    wrong = [value - to, value + to, n // to * to if n // to * to != value else value + 2 * to]
    return f"Round {n} to the nearest {to}.", value, wrong


def single_column(rng, d):
    hi = {"easy": 9, "medium": 49, "hard": 99}[d]
    a, b = rng.randint(1, hi), rng.randint(1, hi)
    return f"{a} + {b} = ?", a + b, distractors(rng, a + b, 3, floor=0)


def carrying(rng, d):
    lo, hi = {"easy": (15, 99), "medium": (150, 999), "hard": (1500, 9999)}[d]
    a, b = rng.randint(lo, hi), rng.randint(lo, hi)
    s = a + b
    wrong = [s - 10, s + 10, s - 1 if s % 10 else s + 1]
    return f"{a} + {b} = ?", s, wrong


def times_tables(rng, d):
    lo, hi = {"easy": (2, 5), "medium": (6, 9), "hard": (11, 12)}[d]
    a, b = rng.randint(lo, hi), rng.randint(2, 12)
    p = a * b
    return f"{a} x {b} = ?", p, [p + a, p - a, p + b if b != a else p + 1]


def multi_digit(rng, d):
    (alo, ahi), (blo, bhi) = {"easy": ((11, 40), (2, 5)), "medium": ((41, 99), (6, 9)),
                              "hard": ((101, 499), (11, 29))}[d]
    a, b = rng.randint(alo, ahi), rng.randint(blo, bhi)
    p = a * b
    return f"{a} x {b} = ?", p, [p + 10, p - 10, p + b]


def equivalence(rng, d):
    den = rng.randint(2, {"easy": 5, "medium": 9, "hard": 15}[d])
    num = rng.randint(1, den - 1)
    k = rng.randint(2, {"easy": 3, "medium": 5, "hard": 9}[d])
    correct = f"{num * k}/{den * k}"
    wrong = [f"{num * k + 1}/{den * k}", f"{num + k}/{den + k}", f"{num * k}/{den * k + k}"]
    return f"Which fraction is equal to {num}/{den}?", correct, wrong


def simplifying(rng, d):
    k = rng.randint(2, {"easy": 3, "medium": 6, "hard": 12}[d])
    den = rng.randint(2, {"easy": 5, "medium": 9, "hard": 13}[d])
    num = rng.randint(1, den - 1)
    g = gcd(num, den)
    num, den = num // g, den // g
    correct = f"{num}/{den}"
    wrong = [f"{num * k}/{den}", f"{num}/{den * k}", f"{num + 1}/{den + 1}"]
    return f"Simplify {num * k}/{den * k}.", correct, wrong


def frac_text(f):
    return f"{f.numerator}/{f.denominator}" if f.denominator != 1 else str(f.numerator)


def like_denominators(rng, d):
    den = rng.randint(3, {"easy": 6, "medium": 10, "hard": 20}[d])
    a, b = rng.randint(1, den - 1), rng.randint(1, den - 1)
    correct = frac_text(Fraction(a + b, den))
    wrong = [f"{a + b}/{2 * den}", frac_text(Fraction(a + b + 1, den)), frac_text(Fraction(abs(a - b) + 1, den))]
    return f"{a}/{den} + {b}/{den} = ? (simplest form)", correct, wrong


def unlike_denominators(rng, d):
    hi = {"easy": 4, "medium": 8, "hard": 12}[d]
    d1, d2 = rng.randint(2, hi), rng.randint(2, hi)
    while d2 == d1:
        d2 = rng.randint(2, hi)
    a, b = rng.randint(1, d1 - 1), rng.randint(1, d2 - 1)
    s = Fraction(a, d1) + Fraction(b, d2)
    correct = frac_text(s)
    wrong = [f"{a + b}/{d1 + d2}", frac_text(s + Fraction(1, d1 * d2)), frac_text(abs(s - Fraction(1, max(d1, d2))) or Fraction(1, d1 * d2 + 1))]
    return f"{a}/{d1} + {b}/{d2} = ? (simplest form)", correct, wrong


def conversion(rng, d):
    den = rng.choice({"easy": (2, 4, 5, 10), "medium": (4, 8, 20, 25), "hard": (8, 16, 40, 125)}[d])
    num = rng.randint(1, den - 1)
    value = num / den
    correct = f"{value:g}"
    wrong = [f"{num / (den * 10):g}", f"{num * 10 / den:g}", f"{(num + 1) / den:g}"]
    return f"Write {num}/{den} as a decimal.", correct, wrong


def comparison(rng, d):
    places = {"easy": 1, "medium": 2, "hard": 3}[d]
    vals = set()
    while len(vals) < 4:
        vals.add(round(rng.randint(1, 10 ** places - 1) / 10 ** places, places))
    vals = sorted(vals)
    correct = f"{vals[-1]:.{places}f}"
    wrong = [f"{v:.{places}f}" for v in vals[:-1]]
    listed = [f"{v:.{places}f}" for v in vals]
    rng.shuffle(listed)
    return f"Which is the largest of {', '.join(listed)}?", correct, wrong


CURRICULUM = [
    ("whole-numbers", "Whole numbers", [
        ("place-value", "Place value", [], [
            ("digit-value", "Value of a digit", digit_value, 5),
            ("rounding", "Rounding", rounding, 3)]),
        ("addition", "Addition", ["place-value"], [
            ("single-column", "Adding without carrying", single_column, 2),
            ("carrying", "Adding with carrying", carrying, 6)]),
        ("multiplication", "Multiplication", ["addition"], [
            ("times-tables", "Times tables", times_tables, 4),
            ("multi-digit", "Multi-digit multiplication", multi_digit, 7)]),
    ]),
    ("fractions", "Fractions and decimals", [
        ("fraction-basics", "What a fraction is", ["multiplication"], [
            ("equivalence", "Equivalent fractions", equivalence, 6),
            ("simplifying", "Simplifying fractions", simplifying, 4)]),
        ("fraction-addition", "Adding fractions", ["fraction-basics", "addition"], [
            ("like-denominators", "Same denominators", like_denominators, 3),
            ("unlike-denominators", "Different denominators", unlike_denominators, 8)]),
        ("decimals", "Decimals", ["fraction-basics"], [
            ("conversion", "Fractions to decimals", conversion, 7),
            ("comparison", "Comparing decimals", comparison, 4)]),
    ]),
]


def importance(rng, base):
    # Per-method weights vary, but the ordering of sections stays the same.
    return {m: base * 2 + rng.randint(0, 1) for m in METHODS}


def build(per_cell, seed):
    rng = random.Random(seed)
    topics, concepts, questions = [], [], []
    for tid, ttitle, tconcepts in CURRICULUM:
        topics.append({"id": tid, "title": ttitle, "concept_ids": [c[0] for c in tconcepts]})
        for cid, ctitle, prereqs, sections in tconcepts:
            concepts.append({
                "id": cid,
                "title": ctitle,
                "prerequisites": prereqs,
                "sections": [{"id": sid, "title": stitle, "importance": importance(rng, base)}
                             for sid, stitle, _, base in sections],
                "assets": {m: f"assets/{cid}/{m}" + (".txt" if m == "text" else ".html" if m != "film" else ".mp4")
                           for m in METHODS},
            })
            for sid, _, template, _ in sections:
                for d in DIFFICULTIES:
                    seen = set()
                    n = 0
                    attempts = 0
                    while n < per_cell:
                        attempts += 1
                        body, correct, wrong = template(rng, d)
                        if body in seen and attempts < 1000:
                            continue
                        wrong = [w for w in dict.fromkeys(str(w) for w in wrong) if w != str(correct)]
                        if len(wrong) < 3:
                            continue
                        seen.add(body)
                        choices, idx = multiple_choice(rng, correct, wrong[:3])
                        n += 1
                        questions.append({
                            "id": f"{cid}-{sid}-{d}-{n:02d}",
                            "concept_id": cid,
                            "section_id": sid,
                            "difficulty": d,
                            "weight": WEIGHT[d],
                            "body": body,
                            "choices": choices,
                            "correct_index": idx,
                        })
    return {"topics": topics, "concepts": concepts, "questions": questions}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--per-cell", type=int, default=50, help="questions per (section, difficulty)")
    ap.add_argument("--seed", type=int, default=20121)
    ap.add_argument("--out", default="data/sample_kb.json")
    args = ap.parse_args()
    kb = build(args.per_cell, args.seed)
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(kb, f, indent=1, ensure_ascii=False)
        f.write("\n")
    print(f"wrote {args.out}: {len(kb['concepts'])} concepts, {len(kb['questions'])} questions")


if __name__ == "__main__":
    main()
