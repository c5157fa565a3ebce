#!/usr/bin/env python3
"""Writes the JSON fixtures under tests/fixtures. Deterministic."""

import argparse
import datetime as dt
import json
import random
from pathlib import Path

FILLER = """the a of and to in that it was for on said with as at by from this
have has had were are been which would could about after before also then
there their some other more most many much very still only just over into
""".split()

VERBS = """attack strike launch announce arrest evacuate collapse flood sign
elect resign acquire merge invest explode rescue protest shoot injure kill
crash burn release charge convict sentence negotiate ban approve reject
open close hire fire score defeat win lose transfer appoint vote raid seize
smuggle recall donate sue settle""".split()

CITIES = [
    ("Q90", 48.8566, 2.3522, ["Q90", "Q13917", "Q142"]),
    ("Q64", 52.52, 13.405, ["Q64", "Q1055", "Q183"]),
    ("Q220", 41.9028, 12.4964, ["Q220", "Q1282", "Q38"]),
    ("Q1492", 41.3851, 2.1734, ["Q1492", "Q5705", "Q29"]),
    ("Q60", 40.7128, -74.006, ["Q60", "Q1384", "Q30"]),
    ("Q84", 51.5074, -0.1278, ["Q84", "Q23306", "Q145"]),
]

SPORTS = """match goal league coach stadium season striker referee club fans
penalty tournament keeper midfield trophy""".split()
FINANCE = """market shares investors bank quarter earnings stock bonds profit
analysts dividend revenue trading index fund""".split()


def day_string(day):
    return day.strftime("%Y-%m-%d")


def sentence(rng, words, lemma, side=3):
    left = [rng.choice(words) for _ in range(side)]
    right = [rng.choice(words) for _ in range(side)]
    return left + [lemma] + right + ["."], side


class DocBuilder:
    def __init__(self, doc_id, topic, subtopic, publish):
        self.doc = {
            "doc_id": doc_id,
            "topic": topic,
            "subtopic": subtopic,
            "publish_date": publish,
            "sentences": [],
            "mentions": [],
            "timex": [],
            "entity_links": [],
            "srl": [],
        }

    def add_sentence(self, tokens):
        self.doc["sentences"].append(tokens)
        return len(self.doc["sentences"]) - 1

    def add_action(self, sent, start, lemma, cluster):
        mid = "m%d" % len(self.doc["mentions"])
        self.doc["mentions"].append({
            "mention_id": mid, "kind": "action", "sentence": sent,
            "token_span": [start, start + 1], "cluster_id": cluster,
            "lemma": lemma})
        return mid


def synthetic(seed=13):
    """Coreference is lemma and same day. Two documents of each subtopic share
    a day and the third reports the next day, so every split has coreferring
    and same-lemma non-coreferring pairs. 4 of 13 lemma types (about 30%)
    name a different event on each day."""
    rng = random.Random(seed)
    topics, subs, docs_per_sub, events_per_day = 4, 2, 3, 7
    base = dt.date(2021, 3, 1)
    days = [base + dt.timedelta(days=6 * i) for i in range(3)]
    verbs = VERBS[:]
    rng.shuffle(verbs)
    ambiguous = verbs[:4]
    pool = iter(verbs[4:])
    events = []
    for d in range(len(days)):
        row = ambiguous + [next(pool) for _ in range(events_per_day - len(ambiguous))]
        rng.shuffle(row)
        events.append(row)

    singles = iter("".join(rng.choice("bcdfghjklmnprstvz") + rng.choice("aeiou") for _ in range(3))
                   for _ in range(1000))
    docs = []
    for t in range(topics):
        topic = "t%d" % (t + 1)
        for s in range(subs):
            sub = "%s-s%d" % (topic, s + 1)
            for d in range(docs_per_sub):
                day_i = (t + s + (d == 2)) % len(days)
                day = days[day_i]
                city = CITIES[day_i]
                b = DocBuilder("%s-d%d" % (sub, d + 1), topic, sub, day_string(day) + "T09:00")
                s0 = b.add_sentence(["reports", "from", "city", "on", day.strftime("%A"), "said", "."])
                b.doc["timex"].append({"sentence": s0, "token_span": [4, 5], "value": day_string(day)})
                b.doc["entity_links"].append({"sentence": s0, "token_span": [2, 3], "kb_id": city[0],
                                              "lat": city[1], "lon": city[2], "hierarchy": city[3]})
                mentions = []
                for j in sorted(rng.sample(range(events_per_day), 4)):
                    lemma = events[day_i][j]
                    mentions += [(lemma, "day%d-%s" % (day_i + 1, lemma))] * rng.choice([1, 2])
                for _ in range(2):
                    lemma = next(singles)
                    mentions.append((lemma, "%s-d%d-%s" % (sub, d + 1, lemma)))
                rng.shuffle(mentions)
                for lemma, cluster in mentions:
                    toks, at = sentence(rng, FILLER, lemma)
                    b.add_action(b.add_sentence(toks), at, lemma, cluster)
                docs.append(b.doc)
    return {"corpus_id": "synthetic", "documents": docs}


def fcc_shaped(seed=29):
    """Two vocabularies; every event is reported in both, so links cross them.
    One tournament-long event ties all documents together."""
    rng = random.Random(seed)
    base = dt.date(2020, 6, 1)
    verbs = VERBS[:]
    rng.shuffle(verbs)
    docs = []
    for day_i in range(3):
        day = base + dt.timedelta(days=11 * day_i)
        events = verbs[2 * day_i: 2 * day_i + 2]
        for group, vocab in (("sport", SPORTS), ("finance", FINANCE)):
            for d in range(2):
                sub = "%s-%d" % (group, day_i + 1)
                b = DocBuilder("%s-d%d" % (sub, d + 1), "fcc", sub, day_string(day))
                for _ in range(3):
                    b.add_sentence([rng.choice(vocab) for _ in range(10)] + ["."])
                mentions = [(lemma, "fcc-%d-%d" % (day_i, j))
                            for j, lemma in enumerate(events) for _ in range(rng.choice([1, 2]))]
                # the tournament itself runs through every document
                mentions.append(("host", "fcc-tournament"))
                rng.shuffle(mentions)
                for lemma, cluster in mentions:
                    toks, at = sentence(rng, vocab, lemma, side=4)
                    b.add_action(b.add_sentence(toks), at, lemma, cluster)
                docs.append(b.doc)
    return {"corpus_id": "fcc-shaped", "documents": docs}


def gvc_shaped(seed=31):
    """One main event per subtopic, reported in each of its documents."""
    rng = random.Random(seed)
    base = dt.date(2019, 1, 7)
    docs = []
    k = 0
    for t in range(3):
        for s in range(2):
            sub = "g%d-s%d" % (t + 1, s + 1)
            day = base + dt.timedelta(days=17 * k)
            k += 1
            for d in range(3):
                b = DocBuilder("%s-d%d" % (sub, d + 1), "g%d" % (t + 1), sub, day_string(day))
                mentions = [("shoot", sub + "-main")] * rng.choice([1, 2])
                mentions += [("injure", "%s-d%d-injure" % (sub, d + 1))]
                mentions += [(rng.choice(VERBS), "%s-d%d-x%d" % (sub, d + 1, x)) for x in range(2)]
                for lemma, cluster in mentions:
                    toks, at = sentence(rng, FILLER, lemma)
                    b.add_action(b.add_sentence(toks), at, lemma, cluster)
                docs.append(b.doc)
    return {"corpus_id": "gvc-shaped", "documents": docs}


def tiny():
    """Two topics, four documents, every component type."""
    d1 = {
        "doc_id": "a1", "topic": "A", "subtopic": "A1", "publish_date": "2020-01-01T10:00",
        "sentences": [
            ["Police", "arrested", "a", "man", "in", "Paris", "on", "Monday", "."],
            ["The", "arrest", "followed", "a", "robbery", "."],
        ],
        "mentions": [
            {"mention_id": "m1", "kind": "action", "sentence": 0, "token_span": [1, 2],
             "cluster_id": "arrest1", "lemma": "arrest"},
            {"mention_id": "m2", "kind": "action", "sentence": 1, "token_span": [1, 2],
             "cluster_id": "arrest1", "lemma": "arrest"},
            {"mention_id": "m3", "kind": "action", "sentence": 1, "token_span": [4, 5],
             "cluster_id": "rob1", "lemma": "robbery"},
            {"mention_id": "p1", "kind": "participant", "sentence": 0, "token_span": [2, 4],
             "anchor": "m1"},
            {"mention_id": "l1", "kind": "location", "sentence": 0, "token_span": [5, 6],
             "anchor": "m1"},
            {"mention_id": "t1", "kind": "time", "sentence": 0, "token_span": [7, 8],
             "anchor": "m1"},
        ],
        "timex": [{"sentence": 0, "token_span": [7, 8], "value": "2019-12-30"}],
        "entity_links": [{"sentence": 0, "token_span": [5, 6], "kb_id": "Q90", "lat": 48.8566,
                          "lon": 2.3522, "hierarchy": ["Q90", "Q13917", "Q142"]}],
        "srl": [{"predicate": {"sentence": 0, "token_span": [1, 2]},
                 "args": [{"role": "participant", "sentence": 0, "token_span": [2, 4]},
                          {"role": "location", "sentence": 0, "token_span": [5, 6]},
                          {"role": "time", "sentence": 0, "token_span": [7, 8]}]}],
    }
    d2 = {
        "doc_id": "a2", "topic": "A", "subtopic": "A1", "publish_date": "2020-01-02",
        "sentences": [["A", "suspect", "was", "detained", "in", "France", "."]],
        "mentions": [
            {"mention_id": "m1", "kind": "action", "sentence": 0, "token_span": [3, 4],
             "cluster_id": "arrest1", "lemma": "detain"},
        ],
        "timex": [],
        "entity_links": [{"sentence": 0, "token_span": [5, 6], "kb_id": "Q142",
                          "hierarchy": ["Q142"]}],
        "srl": [],
    }
    d3 = {
        "doc_id": "a3", "topic": "A", "subtopic": "A2", "publish_date": "2020-03-05",
        "sentences": [["Another", "arrest", "was", "made", "in", "Berlin", "."]],
        "mentions": [
            {"mention_id": "m1", "kind": "action", "sentence": 0, "token_span": [1, 2],
             "cluster_id": "arrest2", "lemma": "arrest"},
        ],
        "timex": [],
        "entity_links": [{"sentence": 0, "token_span": [5, 6], "kb_id": "Q64", "lat": 52.52,
                          "lon": 13.405, "hierarchy": ["Q64", "Q1055", "Q183"]}],
        "srl": [],
    }
    d4 = {
        "doc_id": "b1", "topic": "B", "subtopic": "B1", "publish_date": None,
        "sentences": [["The", "company", "announced", "a", "merger", "."]],
        "mentions": [
            {"mention_id": "m1", "kind": "action", "sentence": 0, "token_span": [2, 3],
             "cluster_id": "announce", "lemma": "announce"},
            {"mention_id": "m2", "kind": "action", "sentence": 0, "token_span": [4, 5],
             "cluster_id": "merge", "lemma": "merger"},
        ],
        "timex": [], "entity_links": [], "srl": [],
    }
    return {"corpus_id": "tiny", "documents": [d1, d2, d3, d4]}


def tiny_vectors(corpus, dim=4, seed=5):
    rng = random.Random(seed)
    lines = []
    def vec():
        return [round(rng.uniform(-1, 1), 4) for _ in range(dim)]
    for d in corpus["documents"]:
        for m in d["mentions"]:
            if m["kind"] == "action":
                lines.append({"key": "%s/%s" % (d["doc_id"], m["mention_id"]), "vector": vec()})
        for i in range(len(d["sentences"])):
            lines.append({"key": "%s/sent/%d" % (d["doc_id"], i), "vector": vec()})
        for e in d["entity_links"]:
            lines.append({"key": "kb/" + e["kb_id"], "vector": vec()})
    seen, out = set(), []
    for l in lines:
        if l["key"] not in seen:
            seen.add(l["key"])
            out.append(l)
    return out


def invalid_fixtures(base):
    bad_anchor = json.loads(json.dumps(base))
    bad_anchor["documents"][0]["mentions"][3]["anchor"] = "nope"
    bad_span = json.loads(json.dumps(base))
    bad_span["documents"][0]["mentions"][0]["token_span"] = [2, 2]
    return bad_anchor, bad_span


def experiment_config(name, path, split, **extra):
    cfg = {
        "corpora": [{"name": name, "path": path, "split": split, "folds_by": "subtopic"}],
        "sampler": {"c": 8, "k": 8, "seed": 0},
        "learner": {"kind": "gbt", "params": {"trees": 40, "max_depth": 3, "learning_rate": 0.3},
                    "space": {"max_depth": [2, 3], "learning_rate": [0.1, 0.3]}},
        "clustering": {"linkage": "average", "criterion": "distance", "threshold": 0.5,
                       "space": {"linkage": ["average", "single"],
                                 "threshold": [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]}},
        "tuning": {"classifier_trials": 4, "clustering_trials": 14, "folds": 3, "repeats": 1,
                   "seed": 0},
        "rfe": True,
        "precluster": "none",
        "seeds": [0, 1, 2, 3, 4],
        "threshold": 0.5,
    }
    cfg.update(extra)
    return cfg


def dump(path, obj):
    path.write_text(json.dumps(obj, indent=1) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "tests" / "fixtures"))
    out = Path(ap.parse_args().out)
    out.mkdir(parents=True, exist_ok=True)

    t = tiny()
    dump(out / "tiny.json", t)
    (out / "tiny_vectors.jsonl").write_text(
        "".join(json.dumps(l) + "\n" for l in tiny_vectors(t)))
    bad_anchor, bad_span = invalid_fixtures(t)
    dump(out / "invalid_anchor.json", bad_anchor)
    dump(out / "invalid_span.json", bad_span)
    (out / "malformed.json").write_text('{"corpus_id": "x", "documents": [\n')

    dump(out / "synthetic.json", synthetic())
    dump(out / "fcc_shaped.json", fcc_shaped())
    dump(out / "gvc_shaped.json", gvc_shaped())

    syn_split = {"mode": "by_topic", "train": ["t1", "t2"], "dev": ["t3"], "test": ["t4"]}
    gvc_split = {"mode": "by_topic", "train": ["g1"], "dev": ["g2"], "test": ["g3"]}
    dump(out / "experiment_synthetic.json",
         experiment_config("synthetic", "synthetic.json", syn_split))
    dump(out / "experiment_masked.json",
         experiment_config("synthetic", "synthetic.json", syn_split,
                           mask={"components": ["action"], "seed": 7}))
    cross = experiment_config("synthetic", "synthetic.json", syn_split, seeds=[0, 1],
                              cross_dataset={"train": [["synthetic"], ["gvc"], ["synthetic", "gvc"]],
                                             "test": ["synthetic", "gvc"]})
    cross["corpora"].append({"name": "gvc", "path": "gvc_shaped.json", "split": gvc_split,
                             "folds_by": "subtopic"})
    dump(out / "experiment_cross.json", cross)


if __name__ == "__main__":
    main()
