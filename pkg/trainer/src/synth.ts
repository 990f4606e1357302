/**
 * Synthetic KG question/query generator.
 *
 * A small typed world (people, cities, countries, companies) with
 * direction-fixed relations: every relation has a subject type and an
 * object type, and gold queries always place entities on the correct side.
 * Templated questions cover object lookups, subject lookups, ASK checks,
 * conjunctions, two- and three-triple chains, and counts, so a model must
 * learn which side of a relation each entity belongs on; that is exactly
 * the knowledge order-corruption pretraining carries.
 *
 * Each template pool is enumerated exhaustively and sampled by quota, so a
 * given (seed, size) always yields the same dataset.
 *
 * Output (generic sparqlkit schema): dataset splits as JSONL records
 * {id, question, query, entities, relations}, a label TSV, and the train
 * split's gold queries as a plain query-per-line corpus for pretraining.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { Rng } from "./rng.js";

interface Entity {
  iri: string;
  label: string;
  type: string;
}

interface Relation {
  iri: string;
  label: string;
  subjType: string;
  objType: string;
}

const WORLD: Record<string, string[]> = {
  person: [
    "alice", "bob", "carol", "david", "emma", "frank", "grace", "henry",
    "irene", "jack", "karen", "leo", "mara", "nina", "oscar", "paula",
    "quinn", "rosa", "sam", "tess", "uma", "vera", "walt", "xena",
    "yuri", "zoe", "amir", "bela", "cyrus", "dina", "eli", "faye",
    "gus", "hana", "ivan", "jade", "kofi", "lena", "milo", "nora",
  ],
  city: [
    "paris", "berlin", "tokyo", "madrid", "rome", "oslo", "cairo", "lima",
    "dublin", "prague", "vienna", "athens", "kyoto", "porto", "bergen",
    "luxor", "cusco", "galway", "brno", "graz", "delphi", "osaka",
    "bilbao", "turin",
  ],
  country: [
    "france", "germany", "japan", "spain", "italy", "norway", "egypt",
    "peru", "ireland", "czechia", "austria", "greece", "portugal",
    "chile", "kenya", "canada",
  ],
  company: [
    "acme", "globex", "initech", "umbrella", "stark", "wayne", "soylent",
    "tyrell", "hooli", "dunder", "sirius", "cyberdyne", "oscorp",
    "wonka", "gringotts", "monsters", "aperture", "blackmesa", "octan",
    "zorg",
  ],
};

// Direction is the whole game: gold queries always put the subject type on
// the left. "manages" relates persons to persons, so there the correct
// order of a given pair is a corpus convention rather than a type fact.
const RELATION_DEFS: [string, string, string][] = [
  ["born_in", "person", "city"],
  ["capital_of", "city", "country"],
  ["works_for", "person", "company"],
  ["based_in", "company", "city"],
  ["citizen_of", "person", "country"],
  ["located_in", "city", "country"],
  ["ceo_of", "person", "company"],
  ["manages", "person", "person"],
];

export interface SynthExample {
  id: string;
  question: string;
  query: string;
  entities: [string, string][];
  relations: [string, string][];
}

export interface SynthDataset {
  train: SynthExample[];
  dev: SynthExample[];
  test: SynthExample[];
  labels: [string, string][];
}

interface Draft {
  question: string;
  query: string;
  entities: Entity[];
  relations: Relation[];
}

function buildWorld(): {
  entities: Entity[];
  relations: Relation[];
  byType: Map<string, Entity[]>;
} {
  const entities: Entity[] = [];
  const byType = new Map<string, Entity[]>();
  let q = 1000;
  for (const [type, labels] of Object.entries(WORLD)) {
    const list: Entity[] = labels.map((label) => ({ iri: `wd:Q${q++}`, label, type }));
    byType.set(type, list);
    entities.push(...list);
  }
  const relations: Relation[] = RELATION_DEFS.map(([label, subjType, objType], i) => ({
    iri: `wdt:P${100 + i}`,
    label,
    subjType,
    objType,
  }));
  return { entities, relations, byType };
}

function enumeratePools(
  relations: Relation[],
  byType: Map<string, Entity[]>,
): Map<string, Draft[]> {
  const rel = (label: string) => relations.find((r) => r.label === label)!;
  const pools = new Map<string, Draft[]>();

  // "the R of X" phrasings deliberately do not reveal which side of the
  // triple the named entity sits on; only knowledge of the relation's
  // direction (or of the specific pair, for manages) disambiguates.
  const objLookup: Draft[] = [];
  const subjLookup: Draft[] = [];
  const count: Draft[] = [];
  const ask: Draft[] = [];
  const askRev: Draft[] = [];
  for (const r of relations) {
    for (const s of byType.get(r.subjType)!) {
      objLookup.push({
        question: `what is the ${r.label} of ${s.label} ?`,
        query: `select distinct ?ans where { ${s.iri} ${r.iri} ?ans }`,
        entities: [s],
        relations: [r],
      });
      for (const o of byType.get(r.objType)!) {
        if (o.iri === s.iri) continue;
        ask.push({
          question: `is ${s.label} ${r.label} ${o.label} ?`,
          query: `ask where { ${s.iri} ${r.iri} ${o.iri} }`,
          entities: [s, o],
          relations: [r],
        });
        // reversed surface order: the object is named first
        askRev.push({
          question: `is ${o.label} the ${r.label} of ${s.label} ?`,
          query: `ask where { ${s.iri} ${r.iri} ${o.iri} }`,
          entities: [o, s],
          relations: [r],
        });
      }
    }
    for (const o of byType.get(r.objType)!) {
      subjLookup.push({
        question: `what is ${o.label} the ${r.label} of ?`,
        query: `select distinct ?ans where { ?ans ${r.iri} ${o.iri} }`,
        entities: [o],
        relations: [r],
      });
      count.push({
        question: `how many ${r.subjType} are ${r.label} ${o.label} ?`,
        query: `select ( count ( ?ans ) as ?cnt ) where { ?ans ${r.iri} ${o.iri} }`,
        entities: [o],
        relations: [r],
      });
    }
  }

  // doubly ambiguous two-hop: "the R2 of the R1 of X"
  const chain2: Draft[] = [];
  for (const [aLabel, bLabel] of [
    ["works_for", "based_in"],
    ["born_in", "located_in"],
    ["ceo_of", "based_in"],
  ] as const) {
    const ra = rel(aLabel);
    const rb = rel(bLabel);
    for (const start of byType.get(ra.subjType)!) {
      chain2.push({
        question: `what is the ${rb.label} of the ${ra.label} of ${start.label} ?`,
        query: `select distinct ?ans where { ${start.iri} ${ra.iri} ?mid . ?mid ${rb.iri} ?ans }`,
        entities: [start],
        relations: [ra, rb],
      });
    }
  }

  const conj: Draft[] = [];
  const born = rel("born_in");
  const works = rel("works_for");
  for (const city of byType.get("city")!) {
    for (const company of byType.get("company")!) {
      conj.push({
        question: `who is ${born.label} ${city.label} and ${works.label} ${company.label} ?`,
        query: `select distinct ?ans where { ?ans ${born.iri} ${city.iri} . ?ans ${works.iri} ${company.iri} }`,
        entities: [city, company],
        relations: [born, works],
      });
    }
  }

  const chain3: Draft[] = [];
  const located = rel("located_in");
  for (const country of byType.get("country")!) {
    for (const company of byType.get("company")!) {
      chain3.push({
        question:
          `who is ${born.label} a city ${located.label} ${country.label} ` +
          `and ${works.label} ${company.label} ?`,
        query:
          `select distinct ?ans where { ?ans ${born.iri} ?mid . ` +
          `?mid ${located.iri} ${country.iri} . ?ans ${works.iri} ${company.iri} }`,
        entities: [country, company],
        relations: [born, located, works],
      });
    }
  }

  pools.set("obj", objLookup);
  pools.set("subj", subjLookup);
  pools.set("count", count);
  pools.set("chain2", chain2);
  pools.set("conj", conj);
  pools.set("chain3", chain3);
  pools.set("askrev", askRev);
  pools.set("ask", ask);
  return pools;
}

// fraction of the requested size per template kind; ask absorbs the rest
const QUOTAS: [string, number][] = [
  ["obj", 0.13],
  ["subj", 0.09],
  ["count", 0.07],
  ["chain2", 0.06],
  ["conj", 0.19],
  ["chain3", 0.14],
  ["askrev", 0.16],
];

export function generate(seed: number, size = 2000): SynthDataset {
  const rng = new Rng(seed);
  const { entities, relations, byType } = buildWorld();
  const pools = enumeratePools(relations, byType);

  const picked: Draft[] = [];
  let remaining = size;
  for (const [kind, fraction] of QUOTAS) {
    const pool = rng.fork(kind.length).shuffle([...pools.get(kind)!]);
    const take = Math.min(pool.length, Math.round(size * fraction), remaining);
    picked.push(...pool.slice(0, take));
    remaining -= take;
  }
  const askPool = rng.fork(99).shuffle([...pools.get("ask")!]);
  picked.push(...askPool.slice(0, Math.min(remaining, askPool.length)));

  const order = rng.fork(3).shuffle([...picked.keys()]);
  const examples: SynthExample[] = order.map((i, n) => {
    const d = picked[i];
    return {
      id: `syn-${n}`,
      question: d.question,
      query: d.query,
      entities: d.entities.map((e): [string, string] => [e.iri, e.label]),
      relations: d.relations.map((r): [string, string] => [r.iri, r.label]),
    };
  });

  const nTrain = Math.floor(examples.length * 0.7);
  const nDev = Math.floor(examples.length * 0.1);
  const labels: [string, string][] = [
    ...entities.map((e): [string, string] => [e.iri, e.label]),
    ...relations.map((r): [string, string] => [r.iri, r.label]),
  ];
  return {
    train: examples.slice(0, nTrain),
    dev: examples.slice(nTrain, nTrain + nDev),
    test: examples.slice(nTrain + nDev),
    labels,
  };
}

export function writeDataset(dataset: SynthDataset, dir: string): Record<string, string> {
  mkdirSync(dir, { recursive: true });
  const paths = {
    train: join(dir, "train.jsonl"),
    dev: join(dir, "dev.jsonl"),
    test: join(dir, "test.jsonl"),
    labels: join(dir, "labels.tsv"),
    trainQueries: join(dir, "train-queries.txt"),
  };
  const toLine = (e: SynthExample) => JSON.stringify(e);
  writeFileSync(paths.train, dataset.train.map(toLine).join("\n") + "\n");
  writeFileSync(paths.dev, dataset.dev.map(toLine).join("\n") + "\n");
  writeFileSync(paths.test, dataset.test.map(toLine).join("\n") + "\n");
  writeFileSync(
    paths.labels,
    dataset.labels.map(([iri, label]) => `${iri}\t${label}`).join("\n") + "\n",
  );
  writeFileSync(paths.trainQueries, dataset.train.map((e) => e.query).join("\n") + "\n");
  return paths;
}
