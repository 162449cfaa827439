/**
 * Conformance execution: run each emitted tool file as a subprocess, parse
 * the capture it prints, issue the same request natively, and diff the two.
 * Tools run sequentially so logs correlate deterministically. Emitted files
 * are never modified.
 */

import { execFile } from "node:child_process";
import { readdir, readFile } from "node:fs/promises";
import path from "node:path";
import { promisify } from "node:util";

import {
  Capture,
  ConformanceResult,
  Summary,
  diffCaptures,
  isCapture,
  summarize,
} from "./capture.js";
import { buildRequestUrl, parseEmittedTool } from "./emitted.js";

const execFileAsync = promisify(execFile);

export interface ConformanceRun {
  results: ConformanceResult[];
  summary: Summary;
}

export async function runEmitted(
  file: string,
  timeoutMs = 60_000,
): Promise<{ capture?: Capture; error?: string }> {
  let stdout: string;
  try {
    const result = await execFileAsync("python3", [file], {
      timeout: timeoutMs,
      maxBuffer: 8 * 1024 * 1024,
    });
    stdout = result.stdout;
  } catch (err) {
    const message = err instanceof Error ? err.message : String(err);
    return { error: `subprocess failed: ${message}` };
  }
  let parsed: unknown;
  try {
    parsed = JSON.parse(stdout);
  } catch {
    return { error: "stdout is not valid JSON" };
  }
  if (!isCapture(parsed)) {
    return { error: "stdout is not a capture object" };
  }
  return { capture: parsed };
}

export async function nativeCapture(url: string, timeoutMs = 60_000): Promise<Capture> {
  const response = await fetch(url, {
    method: "GET",
    signal: AbortSignal.timeout(timeoutMs),
  });
  const text = await response.text();
  let json: unknown = null;
  try {
    json = JSON.parse(text);
  } catch {
    json = null;
  }
  return { status_code: response.status, text, json, content: text };
}

function hostMatches(url: string, mockAddress: string): boolean {
  try {
    return new URL(url).host === mockAddress.replace(/^https?:\/\//, "");
  } catch {
    return false;
  }
}

export async function conformanceForFile(
  file: string,
  mockAddress: string | null,
): Promise<ConformanceResult> {
  const tool = path.basename(file, ".py");
  let url: string;
  try {
    const parsed = parseEmittedTool(await readFile(file, "utf-8"));
    url = buildRequestUrl(parsed);
  } catch (err) {
    const message = err instanceof Error ? err.message : String(err);
    return {
      tool,
      verdict: "crash",
      emitted: null,
      native: null,
      diff: [],
      error: `unreadable tool file: ${message}`,
    };
  }
  if (mockAddress !== null && !hostMatches(url, mockAddress)) {
    // Refuse to replay requests against hosts other than the declared mock.
    return {
      tool,
      verdict: "crash",
      emitted: null,
      native: null,
      diff: [],
      error: `tool targets ${url}, not the mock at ${mockAddress}`,
    };
  }

  const run = await runEmitted(file);
  if (run.error !== undefined || run.capture === undefined) {
    return {
      tool,
      verdict: "crash",
      emitted: null,
      native: null,
      diff: [],
      error: run.error ?? "no capture produced",
    };
  }
  const native = await nativeCapture(url);
  const diff = diffCaptures(run.capture, native);
  return {
    tool,
    verdict: diff.length === 0 ? "match" : "mismatch",
    emitted: run.capture,
    native,
    diff,
  };
}

export async function runConformance(
  toolsDir: string,
  mockAddress: string | null,
): Promise<ConformanceRun> {
  const entries = await readdir(toolsDir);
  const files = entries
    .filter((name) => name.endsWith(".py"))
    .sort()
    .map((name) => path.join(toolsDir, name));
  const results: ConformanceResult[] = [];
  for (const file of files) {
    results.push(await conformanceForFile(file, mockAddress));
  }
  return { results, summary: summarize(results) };
}
