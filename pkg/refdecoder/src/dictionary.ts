import { readFileSync } from "node:fs";

/** Word map with unknown-word passthrough: every token has an image. */
export class DictionaryModel {
  private table: Map<string, string>;

  constructor(entries?: Iterable<[string, string]>) {
    this.table = new Map(entries ?? []);
  }

  static fromTsv(path: string): DictionaryModel {
    const entries: [string, string][] = [];
    for (const line of readFileSync(path, "utf-8").split("\n")) {
      if (!line.trim() || line.startsWith("#")) continue;
      const [src, tgt] = line.split("\t");
      if (src !== undefined && tgt !== undefined) {
        entries.push([src, tgt]);
      }
    }
    return new DictionaryModel(entries);
  }

  translate(token: string): string {
    return this.table.get(token) ?? token;
  }

  get size(): number {
    return this.table.size;
  }
}
