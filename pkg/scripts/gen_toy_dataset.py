#!/usr/bin/env python3
"""Generate the committed toy film dataset: two overlapping knowledge
bases, a gold standard, and a manifest with exact counts.

Layout (per KB, ~200 entities):
  * 20 movie clusters: 1 director, 3 films, 4 actors, wired with
    directed/starring/born_in/filmed_in relationships (KB2 uses its own
    relation and attribute names).
  * 1 anthology cluster: a root film plus 6 volumes whose genre tag sets
    are nested prefixes of the root's; the shared title tokens make all
    volume pairs mutual candidates and the nested tags grade their
    similarity vectors into a strict dominance chain, so rank pruning
    has something real to remove.
  * 20 cities shared by both KBs (exact labels).
  * 3 "remake" films that exist only in KB2 and copy a cluster film's
    title and attributes with a *complete* tag set, strictly dominating
    the true counterpart whose tag set is lossy: with rank cutoff 1 the
    true pair is pruned, with cutoff >= 2 it survives.
  * 8 relationship-free persons per KB: 4 genuine matches, plus
    same-name / similar-name decoys that only the isolated-pair
    classifier or the crowd can reject.
  * 2 entities per KB that carry no label at all.

About half of all matching entities share an exact label (these become
the seed matches); the rest get a perturbed label on the KB2 side.
Dates are kept in the early 1970s so that a few years' difference is
large relative to the magnitude of the encoded value.

Usage: python3 scripts/gen_toy_dataset.py [--out data/toy] [--seed 7]
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from remp.kb import escape_field  # noqa: E402

FIRST = ["Lena", "Omar", "Ruth", "Noah", "Ivy", "Hugo", "Mara", "Felix",
         "Nora", "Silas", "Tessa", "Rafael", "June", "Victor", "Opal",
         "Marcus", "Della", "Simon", "Greta", "Jonas", "Clara", "Derek",
         "Sadie", "Tomas", "Elena", "Bram", "Lucia", "Edgar", "Willa",
         "Oscar", "Petra", "Leon", "Daphne", "Cyrus", "Hazel", "Rufus",
         "Iris", "Walter", "Bonnie", "Amos"]
LAST = ["River", "Brook", "Stone", "Vale", "Pine", "Ash", "Marsh", "Wolfe",
        "Hart", "Frost", "Gale", "Thorn", "Reed", "Lake", "Hill", "Fox",
        "Crane", "Bell", "Snow", "Moss", "Storm", "Dune", "Finch", "Blake",
        "Rhodes", "Sage", "Cliff", "Dale", "Knox", "Birch"]
ADJ = ["Silver", "Crimson", "Silent", "Golden", "Hollow", "Winter",
       "Scarlet", "Broken", "Hidden", "Velvet", "Iron", "Amber", "Frozen",
       "Wild", "Pale", "Burning", "Lost", "Quiet", "Shattered", "Distant",
       "Emerald", "Midnight", "Savage", "Gentle", "Bitter"]
NOUN = ["Parade", "Empire", "Garden", "Harbor", "Mirror", "Crown", "Voyage",
        "Orchard", "Lantern", "Bridge", "Canyon", "Island", "Tempest",
        "Meadow", "Tower", "Compass", "Saddle", "Anthem", "Harvest",
        "Beacon", "Cipher", "Valley", "Forest", "Signal", "Ember"]
CITY = ["Springfield", "Maplewood", "Oakdale", "Brookhaven", "Clearwater",
        "Fairview", "Lakewood", "Greenfield", "Ridgemont", "Summerton",
        "Northgate", "Eastmoor", "Westbrook", "Southport", "Ironvale",
        "Cedarburg", "Pinecrest", "Elmhurst", "Ashford", "Harborview"]
TAGS = ["epic", "war", "noir", "western", "mystery", "romance"]
# remake crews use invented tokens disjoint from every other pool, so the
# new KB2-only people never become candidates of anything in KB1
CREW_FIRST = ["Remo", "Silda", "Joska", "Perrin", "Valko", "Ondra",
              "Mirelle", "Tavish", "Brunhild"]
CREW_LAST = ["Vantress", "Kroom", "Aldegar", "Quennell", "Ostrander",
             "Jelvik", "Marroquin", "Deverel", "Szabo"]

N_CLUSTERS = 20
N_VOLUMES = 6
EPOCH_BASE = 100          # all dates live in days 100..2100 past 1970-01-01

KB1 = {"label": "label", "release": "release_date", "runtime": "runtime",
       "genre": "genre", "birth": "birth_date", "pop": "population",
       "directed": "directed", "starring": "starring",
       "born_in": "born_in", "filmed_in": "filmed_in"}
KB2 = {"label": "label", "release": "released", "runtime": "duration",
       "genre": "tags", "birth": "born", "pop": "pop_count",
       "directed": "helmed", "starring": "cast",
       "born_in": "birthplace", "filmed_in": "shot_in"}


def day_to_iso(day: int) -> str:
    import datetime
    return (datetime.date(1970, 1, 1)
            + datetime.timedelta(days=day)).isoformat()


class Side:
    """Accumulates one KB's triples."""

    def __init__(self, schema):
        self.schema = schema
        self.attrs = []     # (entity, attr, raw, kind)
        self.rels = []      # (head, rel, tail)
        self.entities = set()

    def attr(self, ent, key, raw, kind):
        self.entities.add(ent)
        self.attrs.append((ent, self.schema[key], str(raw), kind))

    def rel(self, head, key, tail):
        self.entities.add(head)
        self.entities.add(tail)
        self.rels.append((head, self.schema[key], tail))


def perturb_name(name: str, style: int) -> str:
    """A label variant that still shares most tokens with the original."""
    toks = name.split()
    if style % 3 == 0:
        return " ".join(toks + ["II"]) if toks[0] != "The" else \
            " ".join(toks[1:])
    if style % 3 == 1:
        return " ".join([toks[0], "M."] + toks[1:])
    return " ".join(toks + ["Jr."])


def build(seed: int):
    kb1, kb2 = Side(KB1), Side(KB2)
    gold = []               # (kb1 entity, kb2 entity)
    manifest = {"seed": seed, "clusters": N_CLUSTERS, "cities": len(CITY),
                "volumes": N_VOLUMES}

    def matched_entity(ident, name, exact, attrs, style=0):
        """Emit one entity into both KBs with shared attribute values;
        KB2 gets a perturbed label when not exact.  Returns the pair of
        entity ids."""
        e1, e2 = f"kb1:{ident}", f"kb2:{ident}"
        kb1.attr(e1, "label", name, "string")
        kb2.attr(e2, "label", name if exact else perturb_name(name, style),
                 "string")
        for key, raw, kind in attrs:
            kb1.attr(e1, key, raw, kind)
            kb2.attr(e2, key, raw, kind)
        gold.append((e1, e2))
        return e1, e2

    # -- cities ---------------------------------------------------------
    cities = []
    for i, cname in enumerate(CITY):
        c1, c2 = matched_entity(f"city{i:02d}", cname, exact=True,
                                attrs=[("pop", 12000 + 731 * i, "number")])
        cities.append((c1, c2))

    # -- movie clusters ---------------------------------------------------
    person_idx = 0
    film_count = 0
    remake_specs = []       # (title, day, runtime, full tags)
    for c in range(N_CLUSTERS):
        dname = f"{FIRST[person_idx % 40]} {LAST[person_idx % 30]}"
        d1, d2 = matched_entity(
            f"dir{c:02d}", dname, exact=(c % 2 == 0),
            attrs=[("birth", day_to_iso(EPOCH_BASE + 17 * person_idx),
                    "date")],
            style=person_idx)
        person_idx += 1
        kb1.rel(d1, "born_in", cities[c % len(CITY)][0])
        kb2.rel(d2, "born_in", cities[c % len(CITY)][1])

        actors = []
        for a in range(4):
            aname = f"{FIRST[person_idx % 40]} {LAST[person_idx % 30]}"
            a1, a2 = matched_entity(
                f"act{c:02d}_{a}", aname, exact=(person_idx % 2 == 0),
                attrs=[("birth", day_to_iso(EPOCH_BASE + 17 * person_idx),
                        "date")],
                style=person_idx)
            person_idx += 1
            kb1.rel(a1, "born_in", cities[(c + a + 1) % len(CITY)][0])
            kb2.rel(a2, "born_in", cities[(c + a + 1) % len(CITY)][1])
            actors.append((a1, a2))

        for i in range(3):
            title = f"The {ADJ[c]} {NOUN[(3 * c + i) % len(NOUN)]}"
            film_count += 1
            film_day = EPOCH_BASE + (97 * film_count) % 1900
            runtime = 84 + ((7 * c + 11 * i) % 60)
            tags = [TAGS[(c + i) % len(TAGS)], TAGS[(c + i + 2) % len(TAGS)]]
            trap = c < 3 and i == 1   # loses a tag on the KB2 side
            f1, f2 = f"kb1:film{c:02d}_{i}", f"kb2:film{c:02d}_{i}"
            exact = trap or (c + i) % 2 == 0   # decoys need the exact title
            kb1.attr(f1, "label", title, "string")
            kb2.attr(f2, "label",
                     title if exact else perturb_name(title, c + i), "string")
            for side, ent in ((kb1, f1), (kb2, f2)):
                side.attr(ent, "release", day_to_iso(film_day), "date")
                side.attr(ent, "runtime", runtime, "number")
            for t in tags:
                kb1.attr(f1, "genre", t, "string")
            for t in (tags[:1] if trap else tags):
                kb2.attr(f2, "genre", t, "string")
            gold.append((f1, f2))
            if trap:
                remake_specs.append((title, film_day, runtime, tags))

            kb1.rel(d1, "directed", f1)
            kb2.rel(d2, "directed", f2)
            for a in (i, i + 1):
                kb1.rel(f1, "starring", actors[a][0])
                kb2.rel(f2, "starring", actors[a][1])
            for extra in range(1 + (i == 1)):   # middle film in two cities
                city = cities[(3 * c + 5 * i + 7 * extra) % len(CITY)]
                kb1.rel(f1, "filmed_in", city[0])
                kb2.rel(f2, "filmed_in", city[1])

    # -- KB2-only remakes (strictly dominate their originals' gold pair) --
    # Each remake gets its own KB2-only crew and shooting locations so its
    # relationship footprint looks like any other film's; crew names use
    # the disjoint pools, and the locations avoid the original's cities,
    # so no new candidate pairs or graph edges appear.
    for j, (title, day, runtime, tags) in enumerate(remake_specs):
        r2 = f"kb2:remake{j}"
        kb2.attr(r2, "label", title, "string")
        kb2.attr(r2, "release", day_to_iso(day), "date")
        kb2.attr(r2, "runtime", runtime, "number")
        for t in tags:
            kb2.attr(r2, "genre", t, "string")
        rd = f"kb2:remake{j}_dir"
        kb2.attr(rd, "label", f"{CREW_FIRST[3 * j]} {CREW_LAST[3 * j]}",
                 "string")
        kb2.attr(rd, "birth", day_to_iso(EPOCH_BASE + 23 * j + 11), "date")
        kb2.rel(rd, "directed", r2)
        for a in range(2):
            ra = f"kb2:remake{j}_act{a}"
            kb2.attr(ra, "label",
                     f"{CREW_FIRST[3 * j + a + 1]} {CREW_LAST[3 * j + a + 1]}",
                     "string")
            kb2.attr(ra, "birth",
                     day_to_iso(EPOCH_BASE + 29 * j + 13 * a + 7), "date")
            kb2.rel(r2, "starring", ra)
        # original trap film (cluster j, middle film) shoots in cities
        # (3j+5)%20 and (3j+12)%20; these two are disjoint from both
        for extra in range(2):
            kb2.rel(r2, "filmed_in",
                    cities[(3 * j + 6 + 7 * extra) % len(CITY)][1])

    # -- anthology: root + nested-tag volumes -----------------------------
    oname = f"{FIRST[person_idx % 40]} {LAST[person_idx % 30]}"
    o1, o2 = matched_entity(
        "dir_anth", oname, exact=True,
        attrs=[("birth", day_to_iso(EPOCH_BASE + 17 * person_idx), "date")])
    person_idx += 1
    root_runtime, root_day = 360, 1900
    x1, x2 = matched_entity(
        "anth_root", "Anthology Omnibus", exact=True,
        attrs=[("release", day_to_iso(root_day), "date"),
               ("runtime", root_runtime, "number")]
        + [("genre", t, "string") for t in TAGS])
    kb1.rel(o1, "directed", x1)
    kb2.rel(o2, "directed", x2)
    kb1.rel(x1, "filmed_in", cities[0][0])
    kb2.rel(x2, "filmed_in", cities[0][1])
    vol_runtimes = [80, 90, 102, 115, 130, 147]   # pairwise >= 12% apart
    for v in range(N_VOLUMES):
        v1, v2 = matched_entity(
            f"anth_vol{v}", f"Anthology Omnibus Volume {v + 1}", exact=True,
            attrs=[("release", day_to_iso(300 + 260 * v), "date"),
                   ("runtime", vol_runtimes[v], "number")]
            + [("genre", t, "string") for t in TAGS[:v + 1]])
        kb1.rel(o1, "directed", v1)
        kb2.rel(o2, "directed", v2)
        kb1.rel(v1, "filmed_in", cities[(v + 1) % len(CITY)][0])
        kb2.rel(v2, "filmed_in", cities[(v + 1) % len(CITY)][1])

    # -- relationship-free persons ----------------------------------------
    iso_specs = [("iso0", "Colin Drift", True), ("iso1", "Maeve Tarn", True),
                 ("iso2", "Basil Crag", False), ("iso3", "Vera Lund", False)]
    for n, (ident, name, exact) in enumerate(iso_specs):
        matched_entity(ident, name, exact,
                       attrs=[("birth", day_to_iso(1200 + 31 * n), "date")],
                       style=n + 1)
    # same-name decoys born years apart: candidates but not matches
    for n, name in enumerate(["Abel Whitlock", "Dinah Pruitt"]):
        e1, e2 = f"kb1:homonym{n}", f"kb2:homonym{n}"
        kb1.attr(e1, "label", name, "string")
        kb2.attr(e2, "label", name, "string")
        kb1.attr(e1, "birth", day_to_iso(400 + 13 * n), "date")
        kb2.attr(e2, "birth", day_to_iso(1800 + 13 * n), "date")
    # similar-name decoys (share one token)
    kb1.attr("kb1:near0", "label", "Edmund Barrow", "string")
    kb1.attr("kb1:near0", "birth", day_to_iso(700), "date")
    kb2.attr("kb2:near0", "label", "Edmund Quill", "string")
    kb2.attr("kb2:near0", "birth", day_to_iso(1500), "date")

    # -- label-free filler -------------------------------------------------
    for n in range(2):
        kb1.attr(f"kb1:fill{n}", "birth", day_to_iso(900 + n), "date")
        kb2.attr(f"kb2:fill{n}", "birth", day_to_iso(950 + n), "date")

    # the crew pools must stay disjoint from every token KB1 can label
    kb1_tokens = {tok.lower() for ent, attr, raw, kind in kb1.attrs
                  if attr == "label" for tok in str(raw).split()}
    crew_tokens = {tok.lower()
                   for tok in CREW_FIRST + CREW_LAST}
    clash = kb1_tokens & crew_tokens
    assert not clash, f"remake crew tokens collide with KB1 labels: {clash}"

    manifest.update(
        entities_kb1=len(kb1.entities),
        entities_kb2=len(kb2.entities),
        attr_triples_kb1=len(set(kb1.attrs)),
        attr_triples_kb2=len(set(kb2.attrs)),
        rel_triples_kb1=len(set(kb1.rels)),
        rel_triples_kb2=len(set(kb2.rels)),
        gold_pairs=len(gold),
        remakes=len(remake_specs),
    )
    return kb1, kb2, gold, manifest


def write_tsv(path: Path, rows):
    with path.open("w", encoding="utf-8") as fh:
        for row in sorted(set(rows)):
            fh.write("\t".join(escape_field(str(c)) for c in row) + "\n")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data/toy")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)

    kb1, kb2, gold, manifest = build(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_tsv(out / "kb1_attrs.tsv", kb1.attrs)
    write_tsv(out / "kb1_rels.tsv", kb1.rels)
    write_tsv(out / "kb2_attrs.tsv", kb2.attrs)
    write_tsv(out / "kb2_rels.tsv", kb2.rels)
    write_tsv(out / "gold.tsv", gold)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2,
                                                  sort_keys=True) + "\n",
                                       encoding="utf-8")
    print(f"wrote {out}/: {manifest}")


if __name__ == "__main__":
    main()
