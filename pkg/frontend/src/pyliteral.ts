/**
 * Minimal parser for the Python literals found in emitted tool files:
 * dicts, lists, quoted strings, numbers, True/False/None.
 */

export type PyValue =
  | string
  | number
  | boolean
  | null
  | PyValue[]
  | { [key: string]: PyValue };

class Parser {
  private pos = 0;

  constructor(private readonly text: string) {}

  parse(): PyValue {
    const value = this.value();
    this.skipWs();
    if (this.pos !== this.text.length) {
      throw new Error(`trailing characters at offset ${this.pos}`);
    }
    return value;
  }

  private skipWs(): void {
    while (this.pos < this.text.length && /\s/.test(this.text[this.pos])) {
      this.pos += 1;
    }
  }

  private value(): PyValue {
    this.skipWs();
    const ch = this.text[this.pos];
    if (ch === undefined) throw new Error("unexpected end of literal");
    if (ch === "{") return this.dict();
    if (ch === "[") return this.list();
    if (ch === "'" || ch === '"') return this.string(ch);
    if (this.text.startsWith("True", this.pos)) {
      this.pos += 4;
      return true;
    }
    if (this.text.startsWith("False", this.pos)) {
      this.pos += 5;
      return false;
    }
    if (this.text.startsWith("None", this.pos)) {
      this.pos += 4;
      return null;
    }
    return this.number();
  }

  private dict(): { [key: string]: PyValue } {
    const out: { [key: string]: PyValue } = {};
    this.pos += 1; // {
    this.skipWs();
    if (this.text[this.pos] === "}") {
      this.pos += 1;
      return out;
    }
    for (;;) {
      const key = this.value();
      if (typeof key !== "string") throw new Error("dict keys must be strings");
      this.skipWs();
      if (this.text[this.pos] !== ":") throw new Error("expected ':' in dict");
      this.pos += 1;
      out[key] = this.value();
      this.skipWs();
      if (this.text[this.pos] === ",") {
        this.pos += 1;
        this.skipWs();
        if (this.text[this.pos] === "}") {
          this.pos += 1;
          return out;
        }
        continue;
      }
      if (this.text[this.pos] === "}") {
        this.pos += 1;
        return out;
      }
      throw new Error("expected ',' or '}' in dict");
    }
  }

  private list(): PyValue[] {
    const out: PyValue[] = [];
    this.pos += 1; // [
    this.skipWs();
    if (this.text[this.pos] === "]") {
      this.pos += 1;
      return out;
    }
    for (;;) {
      out.push(this.value());
      this.skipWs();
      if (this.text[this.pos] === ",") {
        this.pos += 1;
        this.skipWs();
        if (this.text[this.pos] === "]") {
          this.pos += 1;
          return out;
        }
        continue;
      }
      if (this.text[this.pos] === "]") {
        this.pos += 1;
        return out;
      }
      throw new Error("expected ',' or ']' in list");
    }
  }

  private string(quote: string): string {
    this.pos += 1;
    let out = "";
    while (this.pos < this.text.length) {
      const ch = this.text[this.pos];
      if (ch === "\\") {
        const next = this.text[this.pos + 1];
        const escapes: Record<string, string> = {
          n: "\n",
          t: "\t",
          r: "\r",
          "\\": "\\",
          "'": "'",
          '"': '"',
          "0": "\0",
        };
        if (next in escapes) {
          out += escapes[next];
          this.pos += 2;
          continue;
        }
        out += next;
        this.pos += 2;
        continue;
      }
      if (ch === quote) {
        this.pos += 1;
        return out;
      }
      out += ch;
      this.pos += 1;
    }
    throw new Error("unterminated string literal");
  }

  private number(): number {
    const match = /^-?\d+(\.\d+)?([eE][+-]?\d+)?/.exec(this.text.slice(this.pos));
    if (!match) throw new Error(`invalid literal at offset ${this.pos}`);
    this.pos += match[0].length;
    return Number(match[0]);
  }
}

export function parsePythonLiteral(text: string): PyValue {
  return new Parser(text.trim()).parse();
}
