/**
 * Capture objects and the semantic comparison rules: JSON equality ignores
 * key order and number formatting, text equality ignores whitespace runs, so
 * serializer differences between runtimes never fail conformance.
 */

export interface Capture {
  status_code: number | null;
  text: string;
  json: unknown;
  content: string;
}

export type Verdict = "match" | "mismatch" | "crash";

export interface ConformanceResult {
  tool: string;
  verdict: Verdict;
  emitted: Capture | null;
  native: Capture | null;
  diff: string[];
  error?: string;
}

export interface Summary {
  total: number;
  match: number;
  mismatch: number;
  crash: number;
  matchRate: number;
}

const CORE_KEYS = ["status_code", "text", "json", "content"] as const;

export function isCapture(value: unknown): value is Capture {
  if (value === null || typeof value !== "object" || Array.isArray(value)) {
    return false;
  }
  const keys = Object.keys(value);
  return CORE_KEYS.every((key) => keys.includes(key));
}

export function normalizeText(text: string): string {
  return text.replace(/\s+/g, " ").trim();
}

function numbersEqual(a: number, b: number): boolean {
  if (Number.isNaN(a) || Number.isNaN(b)) return Number.isNaN(a) === Number.isNaN(b);
  if (a === b) return true;
  const scale = Math.max(Math.abs(a), Math.abs(b));
  return Math.abs(a - b) <= 1e-9 * scale;
}

export function jsonEquals(a: unknown, b: unknown): boolean {
  if (a === null || b === null) return a === b;
  if (typeof a === "number" && typeof b === "number") return numbersEqual(a, b);
  if (typeof a !== typeof b) return false;
  if (Array.isArray(a) || Array.isArray(b)) {
    if (!Array.isArray(a) || !Array.isArray(b) || a.length !== b.length) {
      return false;
    }
    return a.every((item, i) => jsonEquals(item, b[i]));
  }
  if (typeof a === "object") {
    const aObj = a as Record<string, unknown>;
    const bObj = b as Record<string, unknown>;
    const aKeys = Object.keys(aObj).sort();
    const bKeys = Object.keys(bObj).sort();
    if (aKeys.length !== bKeys.length || aKeys.some((k, i) => k !== bKeys[i])) {
      return false;
    }
    return aKeys.every((key) => jsonEquals(aObj[key], bObj[key]));
  }
  return a === b;
}

/** Field names whose values differ between the two captures. */
export function diffCaptures(emitted: Capture, native: Capture): string[] {
  const diff: string[] = [];
  if (emitted.status_code !== native.status_code) diff.push("status_code");
  if (normalizeText(emitted.text) !== normalizeText(native.text)) diff.push("text");
  if (!jsonEquals(emitted.json, native.json)) diff.push("json");
  if (normalizeText(emitted.content) !== normalizeText(native.content)) {
    diff.push("content");
  }
  return diff;
}

export function summarize(results: ConformanceResult[]): Summary {
  const match = results.filter((r) => r.verdict === "match").length;
  const mismatch = results.filter((r) => r.verdict === "mismatch").length;
  const crash = results.filter((r) => r.verdict === "crash").length;
  return {
    total: results.length,
    match,
    mismatch,
    crash,
    matchRate: results.length ? match / results.length : 0,
  };
}
