/** Word-level vocabulary over single-space token streams. */

export const BOS = 0;
export const EOS = 1;
export const UNK = 2;
const SPECIALS = ["<s>", "</s>", "<unk>"];

export class Vocab {
  readonly tokens: string[];
  private index = new Map<string, number>();

  constructor(tokens: string[]) {
    this.tokens = tokens;
    tokens.forEach((t, i) => this.index.set(t, i));
  }

  static build(texts: Iterable<string>): Vocab {
    const seen = new Set<string>();
    for (const text of texts) {
      for (const tok of text.split(" ")) if (tok) seen.add(tok);
    }
    const words = [...seen].sort();
    return new Vocab([...SPECIALS, ...words]);
  }

  get size(): number {
    return this.tokens.length;
  }

  encode(text: string, addEos = true): number[] {
    const ids = text
      .split(" ")
      .filter((t) => t)
      .map((t) => this.index.get(t) ?? UNK);
    if (addEos) ids.push(EOS);
    return ids;
  }

  decode(ids: number[]): string {
    const words: string[] = [];
    for (const id of ids) {
      if (id === EOS) break;
      if (id === BOS) continue;
      words.push(this.tokens[id] ?? "<unk>");
    }
    return words.join(" ");
  }
}
