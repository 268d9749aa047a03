"""Shipping gate: every release criterion, each printing one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline.
"""

import itertools
import json
import math
import time
import numpy as np

from ake.classifier import best_split, train_tree, tree_depth, tree_probability
from ake.corpus import Document, Sentence, Token
from ake.evaluation import dcg, human_baseline_ndcg, ndcg, run_ablation
from ake.goldstandard import (
    GoldStandard,
    Hit,
    REJECT_FAST_COMPLETION,
    REJECT_LONG_SEQUENCE,
    REJECT_STOPWORD,
    Selection,
    SplitSpec,
    StoryGold,
    filter_bad_hits,
    positive_labels,
    split,
)
from ake.ngram_lm import build_model, quantize_count, dequantize_count
from ake.preprocess import FilterConfig, light_filter
from ake.pipeline import PreprocessConfig, extract, train_model


def _line(name: str, ok: bool, detail: str = "") -> None:
    tag = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{tag}] {name}{suffix}")
    assert ok, f"{name}{suffix}"


def _plain_doc(token_lists, title_first=False) -> Document:
    sentences = []
    pos = 0
    for i, words in enumerate(token_lists):
        tokens = []
        for w in words:
            tokens.append(Token(w, w.lower(), False, (pos, pos + len(w))))
            pos += len(w) + 1
        sentences.append(Sentence(i, tuple(tokens), title_first and i == 0))
    doc = Document(id="fixture", title="t" if title_first else "", body="b", category="Sports")
    doc.sentences = sentences
    return doc


class TestMetricFidelity:
    def test_metric_fidelity(self):
        t0 = time.perf_counter()
        ok_hand = abs(dcg([3, 2, 1]) - 5.63093) <= 1e-5

        rng = np.random.default_rng(2024)
        ok_ideal = True
        for _ in range(1000):
            n = int(rng.integers(1, 40))
            votes = {f"p{i}": int(rng.integers(1, 25)) for i in range(n)}
            ideal = [p for p, _ in sorted(votes.items(), key=lambda kv: -kv[1])]
            if abs(ndcg(ideal, votes, k=10) - 1.0) > 1e-9:
                ok_ideal = False
                break

        ok_perm = True
        for n in range(1, 7):
            for _ in range(5):
                rels = [float(rng.integers(0, 9)) for _ in range(n)]
                best = max(dcg(list(p)) for p in itertools.permutations(rels))
                if dcg(sorted(rels, reverse=True)) < best - 1e-12:
                    ok_perm = False
        elapsed = time.perf_counter() - t0
        ok_time = elapsed < 10.0
        _line(
            "metric fidelity",
            ok_hand and ok_ideal and ok_perm and ok_time,
            f"dcg([3,2,1])={dcg([3, 2, 1]):.5f}, 1000 ideal-orderings, "
            f"perm check n<=6, {elapsed:.1f}s",
        )


class TestLightFiltering:
    @staticmethod
    def _oracle_most_distant(doc):
        """Independent relevance ranking: plain dict math, no package code."""
        counts = []
        for s in doc.sentences:
            c = {}
            for t in s.tokens:
                if t.is_alphabetic and not t.is_stopword:
                    c[t.lower] = c.get(t.lower, 0) + 1
            counts.append(c)
        vocab = sorted({w for c in counts for w in c})
        vectors = [[c.get(w, 0.0) for w in vocab] for c in counts]
        centroid = [sum(col) / len(vectors) for col in zip(*vectors)]

        def dist(a, b):
            return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))

        ranked = sorted(
            range(len(vectors)), key=lambda i: dist(vectors[i], centroid)
        )
        support = set(ranked[:5])
        relevance = [
            min(dist(vectors[i], vectors[j]) for j in support)
            for i in range(len(vectors))
        ]
        return max(range(len(relevance)), key=lambda i: relevance[i])

    def test_light_filtering(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(99)
        ok_counts = True
        for n_body in range(1, 201):
            token_lists = [["headline", "words"]] + [
                [f"w{rng.integers(30)}", f"v{rng.integers(30)}"]
                for _ in range(n_body)
            ]
            doc = _plain_doc(token_lists, title_first=True)
            out = light_filter(doc, FilterConfig())
            want = 1 + n_body - math.floor(0.10 * n_body)
            if len(out.sentences) != want:
                ok_counts = False
                break

        token_lists = [["market", "news", f"extra{i}"] for i in range(11)]
        token_lists.insert(7, ["zebra", "violin", "parade"])
        doc = _plain_doc(token_lists)
        most_distant = self._oracle_most_distant(doc)
        assert [t.lower for t in doc.sentences[most_distant].tokens] == [
            "zebra", "violin", "parade",
        ]
        out = light_filter(doc, FilterConfig(removal_fraction=0.10))
        surviving = {" ".join(t.lower for t in s.tokens) for s in out.sentences}
        ok_plant = (
            "zebra violin parade" not in surviving and len(out.sentences) == 11
        )
        elapsed = time.perf_counter() - t0
        _line(
            "light filtering",
            ok_counts and ok_plant and elapsed < 5.0,
            f"counts for N_body in [1,200], off-topic plant removed, {elapsed:.1f}s",
        )


class TestMphStore:
    def test_mph_store(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(31337)
        words = set()
        while len(words) < 100_000:
            words.add("k" + str(rng.integers(10**12)))
        words = sorted(words)
        true_counts = {w: int(rng.integers(1, 60)) for w in words}
        # single-token sequences so the key set is exactly the 100k unigrams
        sequences = ([w] for w in words for _ in range(true_counts[w]))
        store = build_model(sequences, order=4, fp_bits=16)
        assert store.key_count == 100_000

        bounds = store.bounds
        false_negatives = sum(
            1
            for w in words
            if store.lookup([w]) != dequantize_count(quantize_count(true_counts[w], bounds), bounds)
        )

        probes = 1_000_000
        key_set = set(words)
        false_positives = 0
        checked = 0
        before = store.hash_evals
        while checked < probes:
            junk = "x" + str(rng.integers(10**14))
            if junk in key_set:
                continue
            checked += 1
            if store.lookup([junk]) > 0:
                false_positives += 1
        probe_evals = store.hash_evals - before
        fp_bound = 2 * (2**-16) * probes

        deltas = []
        for q in (words[0], words[-1], "nope", "also missing"):
            b = store.hash_evals
            store.lookup([q])
            deltas.append(store.hash_evals - b)
        ok_const = deltas == [1, 1, 1, 1] and probe_evals == probes

        elapsed = time.perf_counter() - t0
        _line(
            "mph store",
            false_negatives == 0
            and false_positives <= fp_bound
            and ok_const
            and elapsed < 60.0,
            f"0 false negatives of 100k, {false_positives} false positives of 1M "
            f"(bound {fp_bound:.1f}), constant 1 hash eval per lookup, {elapsed:.1f}s",
        )


def _entropy(labels):
    n = len(labels)
    if n == 0:
        return 0.0
    p1 = sum(labels) / n
    return -sum(p * math.log2(p) for p in (p1, 1 - p1) if p > 0)


def _oracle_split(X, y):
    n, d = X.shape
    parent = _entropy(list(y))
    best = None
    for j in range(d):
        values = sorted(set(X[:, j]))
        for a, b in zip(values, values[1:]):
            thr = (a + b) / 2
            left = [y[i] for i in range(n) if X[i, j] <= thr]
            right = [y[i] for i in range(n) if X[i, j] > thr]
            fl, fr = len(left) / n, len(right) / n
            gain = max(parent - fl * _entropy(left) - fr * _entropy(right), 0.0)
            split_info = -(fl * math.log2(fl) + fr * math.log2(fr))
            ratio = gain / split_info
            if best is None or ratio > best[0]:
                best = (ratio, j, thr)
    return best


class TestTreeOracle:
    def test_c45_oracle_equivalence(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(77)
        checked = 0
        mismatches = 0
        while checked < 200:
            n = int(rng.integers(4, 65))
            d = int(rng.integers(1, 5))
            kind = rng.integers(0, 3)
            if kind == 0:
                X = np.round(rng.normal(size=(n, d)), 2)
            elif kind == 1:
                X = rng.integers(0, 2, size=(n, d)).astype(float)
            else:
                X = rng.integers(0, 5, size=(n, d)).astype(float)
            y = rng.integers(0, 2, size=n)
            if len(set(y.tolist())) < 2:
                continue
            want = _oracle_split(X, y.tolist())
            got = best_split(X, y.astype(float), np.ones(n))
            if want is None:
                if got is not None:
                    mismatches += 1
                checked += 1
                continue
            checked += 1
            if got is None:
                mismatches += 1
                continue
            exact = (want[1], want[2]) == (got[1], got[2])
            tied = abs(want[0] - got[0]) <= 1e-9
            if not (exact or tied):
                mismatches += 1

        rows = [([0, 0], 0), ([0, 1], 1), ([1, 0], 1), ([1, 1], 0)]
        from ake.classifier import Instance

        instances = [
            Instance(np.asarray(x, dtype=float), label)
            for x, label in rows
            for _ in range(4)
        ]
        tree = train_tree(instances)
        xor_ok = tree_depth(tree) == 2 and all(
            (tree_probability(tree, np.asarray(x, dtype=float)) >= 0.5) == bool(label)
            for x, label in rows
        )
        elapsed = time.perf_counter() - t0
        _line(
            "c4.5 oracle equivalence",
            mismatches == 0 and xor_ok and elapsed < 30.0,
            f"200 random datasets, 0 mismatches, XOR depth-2 at 100%, {elapsed:.1f}s",
        )


class TestScaleEquivariance:
    def test_scale_equivariance(self, synth, gazetteer, lexicon):
        docs, gold, _ = synth
        train_docs = docs[::3]
        test_docs = [d for i, d in enumerate(docs) if i % 3 == 1][:8]
        pre = PreprocessConfig(coref=False, light_filter=False)

        outputs = []
        # idf log base b rescales the tfidf dimension by c = 1/ln(b)
        for base in (math.e, 2.0, 10.0, math.exp(0.25)):
            model = train_model(
                train_docs,
                gold,
                "baseline,tc,rs",
                lexicon=lexicon,
                gazetteer=gazetteer,
                preprocess=pre,
                bags=5,
                seed=11,
                idf_log_base=base,
            )
            res = model.resources(lexicon=lexicon, gazetteer=gazetteer)
            outputs.append(
                {d.id: extract(d, model, res, k=10) for d in test_docs}
            )
        reference = outputs[0]
        ok = True
        for other in outputs[1:]:
            for sid in reference:
                ref_phrases = [p for p, _ in reference[sid]]
                other_phrases = [p for p, _ in other[sid]]
                if ref_phrases != other_phrases:
                    ok = False
                ref_scores = np.asarray([s for _, s in reference[sid]])
                other_scores = np.asarray([s for _, s in other[sid]])
                if not np.allclose(ref_scores, other_scores, atol=1e-12):
                    ok = False
        _line(
            "scale equivariance",
            ok,
            f"idf bases e,2,10,e^0.25 give identical top-10 lists on "
            f"{len(test_docs)} stories",
        )


class TestGoldStandardRules:
    def test_gold_standard_rules(self, stopwords):
        doc = _plain_doc(
            [["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta",
              "theta", "iota", "kappa", "lam", "mu"]]
        )
        the = Token("the", "the", True, (0, 3))
        stop_doc = Document(id="stop", title="", body="b", category="Sports")
        stop_doc.sentences = [Sentence(0, (the, doc.sentences[0].tokens[0]), False)]

        def make_hit(selections, duration, source_doc):
            return Hit("h", "w", source_doc.id, selections, duration).resolve(source_doc)

        fast = make_hit([Selection(0, 0, 2)], 25.0, doc)
        long_sel = make_hit([Selection(0, 0, 11)], 60.0, doc)
        stop_sel = make_hit([Selection(0, 0, 1)], 60.0, stop_doc)
        clean = make_hit([Selection(0, 0, 2)], 60.0, doc)

        _, rej_fast = filter_bad_hits([fast])
        _, rej_long = filter_bad_hits([long_sel])
        _, rej_stop = filter_bad_hits([stop_sel])
        good, rej_clean = filter_bad_hits([clean])
        ok_rules = (
            rej_fast[0].reasons == [REJECT_FAST_COMPLETION]
            and rej_long[0].reasons == [REJECT_LONG_SEQUENCE]
            and rej_stop[0].reasons == [REJECT_STOPWORD]
            and len(good) == 1
            and not rej_clean
        )

        ok_threshold = True
        for n in range(7, 21):
            need = math.ceil(0.9 * n)
            gs = GoldStandard(
                stories={
                    "s": StoryGold("s", {"in": need, "out": need - 1}, annotators=n)
                }
            )
            if positive_labels(gs)["s"] != {"in"}:
                ok_threshold = False
        _line(
            "gold-standard rules",
            ok_rules and ok_threshold,
            "three heuristics fire independently; ceil-90% matches hand counts "
            "for 7-20 annotators",
        )


class TestDirectionalReplication:
    def test_directional_replication(self, synth, synth_store, gazetteer, lexicon):
        t0 = time.perf_counter()
        docs, gold, _ = synth
        train_ids, test_ids = split(
            gold,
            SplitSpec(45, 15, seed=3),
            categories={d.id: d.category for d in docs},
        )

        def run():
            return run_ablation(
                docs,
                gold,
                ["baseline", "baseline+ss+tc+rs+sc"],
                train_ids,
                test_ids,
                store=synth_store,
                lexicon=lexicon,
                gazetteer=gazetteer,
                bags=10,
                seed=0,
            )

        first = run()
        second = run()
        baseline, full = first
        deterministic = (
            baseline.macro_ndcg == second[0].macro_ndcg
            and full.macro_ndcg == second[1].macro_ndcg
        )
        gap = full.macro_ndcg - baseline.macro_ndcg
        elapsed = time.perf_counter() - t0
        _line(
            "directional replication",
            gap >= 0.05 and deterministic and elapsed < 120.0,
            f"full nDCG {full.macro_ndcg:.4f} vs baseline {baseline.macro_ndcg:.4f} "
            f"(gap {gap:.3f} >= 0.05), deterministic, {elapsed:.0f}s",
        )


class TestHumanBaseline:
    def test_human_baseline_simulation(self):
        gold = {f"p{i}": 6 for i in range(10)}
        annotators = [list(gold)]
        mean = human_baseline_ndcg(annotators, gold, trials=100, k=10, seed=1)
        ok_equal_votes = abs(mean - 1.0) <= 1e-9

        single_gold = {"a": 9, "b": 4, "c": 2}
        trial_scores = {
            human_baseline_ndcg([["b"]], single_gold, trials=1, k=10, seed=s)
            for s in range(50)
        }
        ok_zero_variance = len(trial_scores) == 1
        _line(
            "human-baseline simulation",
            ok_equal_votes and ok_zero_variance,
            f"gold-matching annotator mean={mean:.12f}; single-phrase annotator "
            "has zero variance across trials",
        )


class TestSecondaryAnnotationRoundTrip:
    def test_annotation_round_trip(self, synth, tmp_path):
        from fastapi.testclient import TestClient

        from ake.cli import cli_dispatch
        from ake.service import AnnotationService, build_app

        docs, _, _ = synth
        stories = docs[:2]
        corpus_path = tmp_path / "stories.jsonl"
        with corpus_path.open("w") as fh:
            for d in stories:
                fh.write(
                    json.dumps(
                        {"id": d.id, "title": d.title, "body": d.body, "category": d.category}
                    )
                    + "\n"
                )

        clock = {"now": 0.0}
        service = AnnotationService(
            stories, data_dir=tmp_path / "data", quota=20, clock=lambda: clock["now"]
        )
        client = TestClient(build_app(service))

        # scripted session: fetch a story, click 20 distinct phrases, submit
        from ake.corpus import default_stopwords

        stopword_list = default_stopwords()
        payload = client.get("/api/stories/next", params={"worker": "turk-1"}).json()
        story = payload["story"]
        selections = []
        picked = set()
        for sent in story["sentences"]:
            for i, tok in enumerate(sent["tokens"]):
                if len(picked) >= 20:
                    break
                lower = tok.lower()
                if lower.isalpha() and lower not in stopword_list and lower not in picked:
                    picked.add(lower)
                    selections.append(
                        {"sentence": sent["index"], "start_token": i, "end_token": i + 1}
                    )
        assert len(selections) == 20
        clock["now"] += 95.0
        resp = client.post(
            f"/api/stories/{story['story_id']}/annotations",
            json={"worker": "turk-1", "selections": selections},
        )
        assert resp.status_code == 200

        # a second, rushed session on the other story
        other = client.get("/api/stories/next", params={"worker": "turk-1"}).json()
        rushed_selection = None
        for sent in other["story"]["sentences"]:
            for i, tok in enumerate(sent["tokens"]):
                if tok.lower().isalpha() and tok.lower() not in stopword_list:
                    rushed_selection = {
                        "sentence": sent["index"], "start_token": i, "end_token": i + 1,
                    }
                    break
            if rushed_selection:
                break
        clock["now"] += 25.0
        rushed = client.post(
            f"/api/stories/{other['story']['story_id']}/annotations",
            json={"worker": "turk-1", "selections": [rushed_selection]},
        )
        assert rushed.status_code == 200

        export_text = client.get("/api/export").text
        hits_path = tmp_path / "export.jsonl"
        hits_path.write_text(export_text)
        records = [json.loads(l) for l in export_text.strip().splitlines()]
        rushed_flags = [r.get("flags", []) for r in records if r["story_id"] == other["story"]["story_id"]]
        ok_flagged = rushed_flags == [[REJECT_FAST_COMPLETION]]

        gold_path = tmp_path / "gold.jsonl"
        rc = cli_dispatch(
            [
                "aggregate",
                "--hits", str(hits_path),
                "--stories", str(corpus_path),
                "--out", str(gold_path),
            ]
        )
        assert rc == 0
        gold_record = json.loads(gold_path.read_text().splitlines()[0])
        votes = {p["text"]: p["votes"] for p in gold_record["phrases"]}
        ok_votes = votes == {p: 1 for p in picked}
        _line(
            "annotation round-trip (secondary)",
            ok_flagged and ok_votes and gold_record["story_id"] == story["story_id"],
            "20 scripted selections aggregate to 20 phrases with votes=1; "
            "25s session flagged fast-completion on export",
        )
