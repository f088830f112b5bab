#!/usr/bin/env python3
"""Generates the bundled evaluation datasets under fixtures/.

Output is deterministic: every random choice goes through random.Random(42).

    python3 scripts/gen_synthetic.py [--out fixtures]
"""

import argparse
import json
import random
from pathlib import Path

ARTWORKS = [
    ("Rembrandt", "dbr:Rembrandt", "The Night Watch", "dbr:The_Night_Watch", 1642),
    ("Rembrandt", "dbr:Rembrandt", "The Storm on the Sea of Galilee", "dbr:The_Storm_on_the_Sea_of_Galilee", 1633),
    ("Johannes Vermeer", "dbr:Johannes_Vermeer", "The Milkmaid", "dbr:The_Milkmaid_(Vermeer)", 1658),
    ("Vincent van Gogh", "dbr:Vincent_van_Gogh", "The Starry Night", "dbr:The_Starry_Night", 1889),
    ("Claude Monet", "dbr:Claude_Monet", "Water Lilies", "dbr:Water_Lilies_(Monet_series)", 1899),
    ("Pablo Picasso", "dbr:Pablo_Picasso", "Guernica", "dbr:Guernica_(Picasso)", 1937),
    ("Frida Kahlo", "dbr:Frida_Kahlo", "The Two Fridas", "dbr:The_Two_Fridas", 1939),
    ("Edvard Munch", "dbr:Edvard_Munch", "The Scream", "dbr:The_Scream", 1893),
    ("Salvador Dali", "dbr:Salvador_Dalí", "The Persistence of Memory", "dbr:The_Persistence_of_Memory", 1931),
    ("Sandro Botticelli", "dbr:Sandro_Botticelli", "The Birth of Venus", "dbr:The_Birth_of_Venus", 1486),
    ("Gustav Klimt", "dbr:Gustav_Klimt", "The Kiss", "dbr:The_Kiss_(Klimt)", 1908),
    ("Jan van Eyck", "dbr:Jan_van_Eyck", "The Arnolfini Portrait", "dbr:Arnolfini_Portrait", 1434),
    ("Diego Velazquez", "dbr:Diego_Velázquez", "Las Meninas", "dbr:Las_Meninas", 1656),
    ("Caravaggio", "dbr:Caravaggio", "The Calling of Saint Matthew", "dbr:The_Calling_of_Saint_Matthew", 1600),
    ("Paul Cezanne", "dbr:Paul_Cézanne", "The Card Players", "dbr:The_Card_Players", 1895),
]

PEOPLE = [
    ("Rembrandt", "dbr:Rembrandt"),
    ("Johannes Vermeer", "dbr:Johannes_Vermeer"),
    ("Vincent van Gogh", "dbr:Vincent_van_Gogh"),
    ("Claude Monet", "dbr:Claude_Monet"),
    ("Pablo Picasso", "dbr:Pablo_Picasso"),
    ("Frida Kahlo", "dbr:Frida_Kahlo"),
    ("Edvard Munch", "dbr:Edvard_Munch"),
    ("Gustav Klimt", "dbr:Gustav_Klimt"),
    ("Steve Jobs", "dbr:Steve_Jobs"),
    ("Bill Gates", "dbr:Bill_Gates"),
    ("Henry Ford", "dbr:Henry_Ford"),
    ("Walt Disney", "dbr:Walt_Disney"),
    ("Galileo Galilei", "dbr:Galileo_Galilei"),
    ("Barack Obama", "dbr:Barack_Obama"),
]

CITIES = [
    ("Leiden", "dbr:Leiden"),
    ("Amsterdam", "dbr:Amsterdam"),
    ("Delft", "dbr:Delft"),
    ("Paris", "dbr:Paris"),
    ("Florence", "dbr:Florence"),
    ("Madrid", "dbr:Madrid"),
    ("Vienna", "dbr:Vienna"),
    ("Oslo", "dbr:Oslo"),
    ("Berlin", "dbr:Berlin"),
    ("London", "dbr:London"),
    ("Rome", "dbr:Rome"),
    ("Hannover", "dbr:Hannover"),
    ("Seattle", "dbr:Seattle"),
    ("Detroit", "dbr:Detroit"),
    ("Barcelona", "dbr:Barcelona"),
    ("Milan", "dbr:Milan"),
]

# Companies whose label does not clash with a lowercase common noun.
COMPANIES = [
    ("Bill Gates", "dbr:Bill_Gates", "Microsoft", "dbr:Microsoft", 1975),
    ("Larry Page", "dbr:Larry_Page", "Google", "dbr:Google", 1998),
    ("Henry Ford", "dbr:Henry_Ford", "Ford Motor Company", "dbr:Ford_Motor_Company", 1903),
    ("Jeff Bezos", "dbr:Jeff_Bezos", "Amazon", "dbr:Amazon_(company)", 1994),
    ("Elon Musk", "dbr:Elon_Musk", "SpaceX", "dbr:SpaceX", 2002),
    ("Walt Disney", "dbr:Walt_Disney", "The Walt Disney Company", "dbr:The_Walt_Disney_Company", 1923),
]

# Companies whose label equals a lowercase common noun up to case.
AMBIGUOUS = [
    ("Steve Jobs", "dbr:Steve_Jobs", "Apple", "dbr:Apple_Inc.", 1976),
    ("William Lyons", "dbr:William_Lyons", "Jaguar", "dbr:Jaguar_Cars", 1922),
    ("Marcus Samuel", "dbr:Marcus_Samuel", "Shell", "dbr:Shell_plc", 1907),
    ("Larry Ellison", "dbr:Larry_Ellison", "Oracle", "dbr:Oracle_Corporation", 1977),
    ("Rudolf Dassler", "dbr:Rudolf_Dassler", "Puma", "dbr:Puma_SE", 1948),
]

KINSHIP = [
    ("Durin", "dbr:Durin", "son", "Thorin", "dbr:Thorin_Oakenshield"),
    ("Telemachus", "dbr:Telemachus", "son", "Odysseus", "dbr:Odysseus"),
    ("Achilles", "dbr:Achilles", "son", "Peleus", "dbr:Peleus"),
    ("Icarus", "dbr:Icarus", "son", "Daedalus", "dbr:Daedalus"),
    ("Perseus", "dbr:Perseus", "son", "Zeus", "dbr:Zeus"),
    ("Isaac", "dbr:Isaac", "son", "Abraham", "dbr:Abraham"),
    ("Electra", "dbr:Electra", "daughter", "Agamemnon", "dbr:Agamemnon"),
    ("Athena", "dbr:Athena", "daughter", "Zeus", "dbr:Zeus"),
]

KINSHIP_TAILS = ["was a king", "was a hero", "lived", "was famous", "was brave"]
DESCRIPTORS = ["the famous painter", "the old master", "a gifted artist", "the great painter", "a master painter"]

ARTIST = "dbo:Artist"
YEAR = "dbp:year"
BIRTH = "dbo:birthPlace"
DEATH = "dbo:deathPlace"
RESIDENCE = "dbo:residence"
FOUNDED = "dbp:founded"
FOUNDING_YEAR = "dbo:foundingYear"
PARENT = "dbo:parent"


def triple(s, p, o):
    return {"s": s, "p": p, "o": str(o)}


class Builder:
    """Concatenates text pieces while recording the character span of each
    marked piece. Python string indices are code points, matching the
    character offsets of the dataset format."""

    def __init__(self):
        self.text = ""
        self.marks = {}

    def add(self, piece, mark=None):
        start = len(self.text)
        self.text += piece
        if mark is not None:
            self.marks[mark] = span(self.text, start, len(self.text))
        return self


def span(text, start, end):
    return {"start": start, "end": end, "surface": text[start:end]}


def example(ident, text, gold, kg="dbpedia", **gold_intermediates):
    row = {"id": ident, "text": text, "kg": kg, "gold_triples": gold}
    row.update(gold_intermediates)
    return row


def class_simple(rng, n):
    rows = []
    for i in range(n):
        kind = i % 4
        if kind == 0:
            artist, a_iri, work, w_iri, _ = rng.choice(ARTWORKS)
            rows.append((f"{artist} painted {work}.", [triple(a_iri, ARTIST, w_iri)]))
        elif kind == 1:
            (person, p_iri), (city, c_iri) = rng.choice(PEOPLE), rng.choice(CITIES)
            rows.append((f"{person} was born in {city}.", [triple(p_iri, BIRTH, c_iri)]))
        elif kind == 2:
            founder, f_iri, company, c_iri, _ = rng.choice(COMPANIES)
            rows.append((f"{founder} founded {company}.", [triple(f_iri, FOUNDED, c_iri)]))
        else:
            (person, p_iri), (city, c_iri) = rng.choice(PEOPLE), rng.choice(CITIES)
            verb, prop = rng.choice([("lived in", RESIDENCE), ("died in", DEATH)])
            rows.append((f"{person} {verb} {city}.", [triple(p_iri, prop, c_iri)]))
    return rows


def class_pronoun(rng, n):
    rows = []
    for i in range(n):
        if i % 2 == 0:
            artist, a_iri, work, w_iri, year = rng.choice(ARTWORKS)
            verb = rng.choice(["was painted in", "was completed in"])
            rows.append(
                (
                    f"{artist} painted {work}. It {verb} {year}.",
                    [triple(a_iri, ARTIST, w_iri), triple(w_iri, YEAR, year)],
                )
            )
        else:
            founder, f_iri, company, c_iri, year = rng.choice(COMPANIES)
            rows.append(
                (
                    f"{founder} founded {company}. It was founded in {year}.",
                    [triple(f_iri, FOUNDED, c_iri), triple(c_iri, FOUNDING_YEAR, year)],
                )
            )
    return rows


def class_lowercase(rng, n):
    rows = []
    for i in range(n):
        kind = i % 3
        if kind == 0:
            artist, a_iri, work, w_iri, _ = rng.choice(ARTWORKS)
            text = f"{artist.lower()} painted {work.lower()}."
            rows.append((text, [triple(a_iri, ARTIST, w_iri)]))
        elif kind == 1:
            (person, p_iri), (city, c_iri) = rng.choice(PEOPLE), rng.choice(CITIES)
            rows.append((f"{person.lower()} was born in {city.lower()}.", [triple(p_iri, BIRTH, c_iri)]))
        else:
            founder, f_iri, company, c_iri, _ = rng.choice(COMPANIES)
            rows.append((f"{founder.lower()} founded {company.lower()}.", [triple(f_iri, FOUNDED, c_iri)]))
    return rows


def class_ambiguous(rng, n):
    rows = []
    for i in range(n):
        founder, f_iri, company, c_iri, year = AMBIGUOUS[i % len(AMBIGUOUS)]
        kind = (i // len(AMBIGUOUS)) % 3
        if kind == 0:
            rows.append((f"{founder} founded {company}.", [triple(f_iri, FOUNDED, c_iri)]))
        elif kind == 1:
            rows.append((f"{company} was founded in {year}.", [triple(c_iri, FOUNDING_YEAR, year)]))
        else:
            rows.append((f"{founder} established {company}.", [triple(f_iri, FOUNDED, c_iri)]))
    rng.shuffle(rows)
    return rows


def class_conjunction(rng, n):
    rows = []
    for _ in range(n):
        first, second = rng.sample(ARTWORKS, 2)
        rows.append(
            (
                f"{first[0]} painted {first[2]}, and {second[0]} painted {second[2]}.",
                [triple(first[1], ARTIST, first[3]), triple(second[1], ARTIST, second[3])],
            )
        )
    return rows


def class_appositive(rng, n):
    rows = []
    for i in range(n):
        child, c_iri, relation, parent, p_iri = KINSHIP[i % len(KINSHIP)]
        tail = rng.choice(KINSHIP_TAILS)
        rows.append((f"{child}, {relation} of {parent}, {tail}.", [triple(c_iri, PARENT, p_iri)]))
    return rows


def class_described_subject(rng, n):
    rows = []
    for _ in range(n):
        artist, a_iri, work, w_iri, _ = rng.choice(ARTWORKS)
        rows.append(
            (
                f"{artist}, {rng.choice(DESCRIPTORS)}, painted {work}.",
                [triple(a_iri, ARTIST, w_iri)],
            )
        )
    return rows


SYNTHETIC_CLASSES = [
    ("simple", class_simple, 48),
    ("pronoun", class_pronoun, 40),
    ("lowercase", class_lowercase, 40),
    ("ambiguous", class_ambiguous, 30),
    ("conjunction", class_conjunction, 30),
    ("appositive", class_appositive, 24),
    ("described", class_described_subject, 24),
]


def synthetic(rng):
    rows = []
    for name, make, n in SYNTHETIC_CLASSES:
        for i, (text, gold) in enumerate(make(rng, n)):
            rows.append(example(f"{name}-{i:03d}", text, gold))
    rng.shuffle(rows)
    return rows


def annotated(ident, original, clusters, resolved, triples):
    """An example with all gold intermediates.

    `original` and `resolved` are Builders over the raw and the coreference
    resolved text. `clusters` lists (representative mark, [mention marks])
    on `original`. `triples` lists (subject mark, predicate mark, object
    mark, subject IRI, predicate IRI, object IRI or literal) on `resolved`;
    a literal object has no entity link.
    """
    gold, text_triples, entity_links, relation_links = [], [], [], []
    for s, p, o, s_iri, p_iri, o_val in triples:
        m = resolved.marks
        gold.append(triple(s_iri, p_iri, o_val))
        text_triples.append({"subject": m[s], "predicate": m[p], "object": m[o]})
        for mark, iri in [(s, s_iri), (o, o_val)]:
            if not isinstance(iri, str) or ":" not in iri:
                continue
            link = {"span": m[mark], "iri": iri}
            if link not in entity_links:
                entity_links.append(link)
        relation_links.append({"span": m[p], "iri": p_iri})
    return example(
        ident,
        original.text,
        gold,
        gold_clusters=[
            {"representative": original.marks[rep], "mentions": [original.marks[x] for x in mentions]}
            for rep, mentions in clusters
        ],
        gold_text_triples=text_triples,
        gold_entity_links=entity_links,
        gold_relation_links=relation_links,
    )


def simple_annotated(ident, subject, predicate, obj, s_iri, p_iri, o_val):
    b = Builder().add(subject, "s").add(" ").add(predicate, "p").add(" ").add(str(obj), "o").add(".")
    return annotated(ident, b, [], b, [("s", "p", "o", s_iri, p_iri, o_val)])


def pronoun_annotated(ident, subject, verb, work, s_iri, w_iri, pred2, year):
    original = (
        Builder().add(subject, "s").add(" ").add(verb, "p").add(" ").add(work, "w")
        .add(". ").add("It", "it").add(f" {pred2} {year}.")
    )
    resolved = (
        Builder().add(subject, "s").add(" ").add(verb, "p").add(" ").add(work, "w")
        .add(". ").add(work, "w2").add(" ").add(pred2, "p2").add(" ").add(str(year), "y").add(".")
    )
    return annotated(
        ident,
        original,
        [("w", ["it"])],
        resolved,
        [
            ("s", "p", "w", s_iri, ARTIST, w_iri),
            ("w2", "p2", "y", w_iri, YEAR, year),
        ],
    )


def microbench(rng):
    rows = []
    picks = rng.sample(ARTWORKS, 8)
    for i, (artist, a_iri, work, w_iri, _) in enumerate(picks[:4]):
        rows.append(simple_annotated(f"mb-cap-art-{i}", artist, "painted", work, a_iri, ARTIST, w_iri))
    for i, (artist, a_iri, work, w_iri, _) in enumerate(picks[4:]):
        rows.append(
            simple_annotated(f"mb-low-art-{i}", artist.lower(), "painted", work.lower(), a_iri, ARTIST, w_iri)
        )
    people = rng.sample(PEOPLE, 8)
    cities = rng.sample(CITIES, 8)
    for i in range(4):
        (person, p_iri), (city, c_iri) = people[i], cities[i]
        rows.append(simple_annotated(f"mb-cap-born-{i}", person, "was born in", city, p_iri, BIRTH, c_iri))
    for i in range(4, 8):
        (person, p_iri), (city, c_iri) = people[i], cities[i]
        rows.append(
            simple_annotated(f"mb-low-born-{i}", person.lower(), "was born in", city.lower(), p_iri, BIRTH, c_iri)
        )
    for i, (founder, f_iri, company, c_iri, _) in enumerate(COMPANIES[:3]):
        rows.append(simple_annotated(f"mb-cap-founded-{i}", founder, "founded", company, f_iri, FOUNDED, c_iri))
    for i, (founder, f_iri, company, c_iri, _) in enumerate(COMPANIES[3:]):
        rows.append(
            simple_annotated(
                f"mb-low-founded-{i}", founder.lower(), "founded", company.lower(), f_iri, FOUNDED, c_iri
            )
        )
    for i, (artist, a_iri, work, w_iri, year) in enumerate(rng.sample(ARTWORKS, 3)):
        pred2 = "was painted in" if i % 2 == 0 else "was completed in"
        rows.append(pronoun_annotated(f"mb-pron-{i}", artist, "painted", work, a_iri, w_iri, pred2, year))
    for i, (child, c_iri, relation, parent, p_iri) in enumerate(KINSHIP[:4]):
        b = (
            Builder().add(child, "s").add(", ").add(f"{relation} of", "p").add(" ")
            .add(parent, "o").add(", ").add(KINSHIP_TAILS[i])
            .add(".")
        )
        rows.append(annotated(f"mb-appos-{i}", b, [], b, [("s", "p", "o", c_iri, PARENT, p_iri)]))
    # Covered relation: no surface form for the gold property.
    b = Builder().add("Which companies have launched a rocket from ").add("Cape Canaveral Air Force Station", "o").add("?")
    rows.append(
        example(
            "mb-covered-0",
            b.text,
            [triple("dbr:SpaceX", "dbo:manufacturer", "dbr:Cape_Canaveral_Space_Force_Station")],
            gold_clusters=[],
            gold_text_triples=[],
            gold_entity_links=[{"span": b.marks["o"], "iri": "dbr:Cape_Canaveral_Space_Force_Station"}],
            gold_relation_links=[],
        )
    )
    assert len(rows) == 30, len(rows)
    return rows


def rembrandt():
    return [
        pronoun_annotated(
            "rembrandt",
            "Rembrandt",
            "painted",
            "The Storm on the Sea of Galilee",
            "dbr:Rembrandt",
            "dbr:The_Storm_on_the_Sea_of_Galilee",
            "was painted in",
            1633,
        )
    ]


def orkg():
    b = (
        Builder().add("We estimate that ").add("Wuhan", "s").add(" ")
        .add("has an average reproduction number of", "p").add(" ").add("2.68", "o").add(".")
    )
    row = annotated("orkg-r0", b, [], b, [("s", "p", "o", "orkg:R48100", "orkgp:P16022", "2.68")])
    row["kg"] = "orkg"
    return [row]


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
    print(f"{path}: {len(rows)} examples")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=Path(__file__).resolve().parent.parent / "fixtures", type=Path)
    parser.add_argument("--seed", default=42, type=int)
    args = parser.parse_args()
    rng = random.Random(args.seed)
    write_jsonl(args.out / "synthetic-dbpedia.jsonl", synthetic(rng))
    write_jsonl(args.out / "microbench-30.jsonl", microbench(rng))
    write_jsonl(args.out / "rembrandt.jsonl", rembrandt())
    write_jsonl(args.out / "orkg-example.jsonl", orkg())


if __name__ == "__main__":
    main()
