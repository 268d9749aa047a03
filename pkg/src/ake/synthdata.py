"""Deterministic synthetic news corpus with a vote-weighted gold standard.

Sixty stories, six per category. Each story plants three key phrases that
carry the separating signals real key phrases tend to carry: they sit in
sentences with rhetorical cues, they are capitalized names, they are
gazetteer entries, and they are frequent in the language-model seed text.
Decoy phrases match the planted ones on term frequency, document frequency,
length and position, so term statistics alone cannot tell them apart.

Run ``python -m ake.synthdata --out DIR`` to write the demo files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .corpus import CATEGORIES, Document, segment_and_tokenize
from .goldstandard import GoldStandard, StoryGold

DOCS_PER_CATEGORY = 6
ANNOTATORS = 10

# All planted phrases are entries in the bundled gazetteer.
PLANTED: dict[str, list[str]] = {
    "Technology": [
        "machine learning", "operating system", "cloud computing",
        "search engine", "artificial intelligence", "virtual reality",
    ],
    "Crime": [
        "crime scene", "police department", "arrest warrant",
        "grand jury", "class action lawsuit", "surveillance footage",
    ],
    "Sports": [
        "super bowl", "home run", "world series",
        "slam dunk", "penalty kick", "world cup",
    ],
    "Health": [
        "clinical trial", "public health", "emergency room",
        "heart surgery", "prescription drug", "vaccine",
    ],
    "Art and Culture": [
        "art auction", "oil painting", "music festival",
        "opera house", "stage production", "literary prize",
    ],
    "Fashion": [
        "fashion week", "haute couture", "runway show",
        "designer label", "ready to wear", "capsule collection",
    ],
    "Science": [
        "quantum mechanics", "particle accelerator", "solar eclipse",
        "stem cell", "nuclear fusion", "higgs boson",
    ],
    "Business": [
        "hedge fund", "venture capital", "quarterly earnings",
        "stock exchange", "merger talks", "supply chain",
    ],
    "World Politics": [
        "prime minister", "ceasefire", "peacekeeping force",
        "border crossing", "travel ban", "asylum seeker",
    ],
    "U.S. Politics": [
        "supreme court", "electoral college", "executive order",
        "federal budget", "attorney general", "house of representatives",
    ],
}

# Two-word nonsense decoys per category; none are cue words or gazetteer keys.
_DECOY_SYLLABLES = (
    "vor", "len", "dra", "mek", "sul", "tar", "nim", "pol", "gar", "fen",
    "rus", "bel", "kor", "dal", "mir", "sov", "tej", "lum", "per", "zan",
)

_CUE_TEMPLATES = (
    "It all boils down to {p} this season.",
    "Moreover, {p} should be noted by observers.",
    "In addition, {p} drew wide praise.",
    "For example, {p} set the pace once more.",
)

_PLAIN_TEMPLATES = (
    "The {d} committee discussed the {f} report.",
    "Officials said the {d} plan moved ahead.",
    "A {f} review described the {d} effort.",
    "The {d} schedule included a {f} update.",
    "Members of the {d} board prepared the {f} meeting.",
)

_FILLERS = (
    "committee", "report", "plan", "review", "effort",
    "schedule", "update", "board", "meeting", "budget",
)

_NUMBER_WORDS = ("one", "two", "three", "four", "five", "six")


def _decoy_pools(rng: np.random.Generator) -> dict[str, list[str]]:
    """Twelve two-word decoys per category, from unique nonsense words."""
    pools = {}
    seen: set[str] = set()
    for cat in CATEGORIES:
        words = []
        while len(words) < 24:
            w = "".join(rng.choice(_DECOY_SYLLABLES, size=2))
            if w not in seen:
                seen.add(w)
                words.append(w)
        pools[cat] = [f"{words[2 * i]} {words[2 * i + 1]}" for i in range(12)]
    return pools


def _titlecase(phrase: str) -> str:
    return " ".join(w if w in ("of", "de", "to") else w.capitalize() for w in phrase.split())


def synthesize_corpus(
    seed: int = 7,
) -> tuple[list[Document], GoldStandard, list[list[str]]]:
    """Build the 60-story corpus, its gold standard, and LM seed sequences.

    The LM sequences are every story sentence plus heavy repetitions of the
    planted phrases, so planted phrases come out frequent in the n-gram
    store built from them.
    """
    rng = np.random.default_rng(seed)
    decoys = _decoy_pools(rng)
    docs: list[Document] = []
    stories: dict[str, StoryGold] = {}
    lm_sequences: list[list[str]] = []

    for cat in CATEGORIES:
        slug = cat.lower().replace(" ", "-").replace(".", "")
        for j in range(DOCS_PER_CATEGORY):
            doc_id = f"{slug}-{j + 1}"
            # The rotations give planted phrases and decoys the same document
            # frequency (3 stories each), so tf-idf cannot tell them apart.
            planted = [PLANTED[cat][(j + k) % len(PLANTED[cat])] for k in range(3)]
            decoy_set = [decoys[cat][(2 * j + k) % 12] for k in range(6)]

            used_fillers: list[str] = []
            body_sentences: list[str] = []
            for p in planted:
                shown = _titlecase(p)
                picks = rng.choice(len(_CUE_TEMPLATES), size=2, replace=False)
                for t in picks:
                    body_sentences.append(_CUE_TEMPLATES[t].format(p=shown))
            for d in decoy_set:
                picks = rng.choice(len(_PLAIN_TEMPLATES), size=2, replace=False)
                for t in picks:
                    f = _FILLERS[int(rng.integers(len(_FILLERS)))]
                    used_fillers.append(f)
                    body_sentences.append(_PLAIN_TEMPLATES[t].format(d=d, f=f))
            body_sentences.append("The weekly desk prepared the usual summary offline.")
            body_sentences.append("Readers sent the desk a steady stream of letters.")
            rng.shuffle(body_sentences)

            title = f"Weekly {cat} briefing number {_NUMBER_WORDS[j]}"
            body = " ".join(body_sentences)
            doc = Document(id=doc_id, title=title, body=body, category=cat)
            doc.sentences = segment_and_tokenize(title, body)
            docs.append(doc)

            votes: dict[str, int] = {}
            for p in planted:
                votes[p] = int(rng.integers(9, ANNOTATORS + 1))
            for m in sorted(set(used_fillers))[:5]:
                votes[m] = int(rng.integers(3, 8))
            votes[decoy_set[0]] = int(rng.integers(1, 3))
            stories[doc_id] = StoryGold(
                story_id=doc_id, votes=votes, annotators=ANNOTATORS
            )

            for s in doc.sentences:
                lm_sequences.append([t.lower for t in s.tokens])

    for cat in CATEGORIES:
        for p in PLANTED[cat]:
            for _ in range(50):
                lm_sequences.append(p.split())

    return docs, GoldStandard(stories=stories), lm_sequences


def write_demo(out_dir: str | Path, seed: int = 7) -> dict[str, Path]:
    """Write corpus.jsonl, gold.jsonl and lm.txt for the demo walkthrough."""
    from .goldstandard import save_gold

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    docs, gold, lm_sequences = synthesize_corpus(seed)

    corpus_path = out / "corpus.jsonl"
    with corpus_path.open("w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(
                json.dumps(
                    {"id": d.id, "title": d.title, "body": d.body, "category": d.category},
                    sort_keys=True,
                )
                + "\n"
            )
    gold_path = out / "gold.jsonl"
    save_gold(gold, gold_path)
    lm_path = out / "lm.txt"
    with lm_path.open("w", encoding="utf-8") as fh:
        for seq in lm_sequences:
            fh.write(" ".join(seq) + "\n")
    return {"corpus": corpus_path, "gold": gold_path, "lm": lm_path}


if __name__ == "__main__":
    import argparse

    parser = argparse.ArgumentParser(description="write the bundled demo dataset")
    parser.add_argument("--out", default="demo", help="output directory")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    paths = write_demo(args.out, args.seed)
    for name, p in paths.items():
        print(f"wrote {name}: {p}")
