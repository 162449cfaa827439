/**
 * Reader for emitted tool source files. The files follow a fixed template:
 * a single function, an EXAMPLE_BINDING literal, and a protected main block
 * that prints the capture object. This module recovers enough structure to
 * reproduce the request natively: URL template, path parameters, optional
 * suffix handling, and query assignments.
 */

import { parsePythonLiteral, PyValue } from "./pyliteral.js";

export interface SuffixRule {
  param: string;
  skipValue: string | null;
}

export interface EmittedTool {
  name: string;
  binding: Record<string, PyValue>;
  /** URL with `{pyName}` placeholders for path parameters. */
  urlTemplate: string;
  pathParams: string[];
  suffix: SuffixRule | null;
  /** Query defaults baked into the source via params.setdefault. */
  frozenParams: Record<string, string>;
  /** Conditional query assignments: function arg name -> wire key. */
  queryParams: Array<{ arg: string; key: string }>;
}

const FUNC_RE = /^def (\w+)\(/m;
const BINDING_RE = /^EXAMPLE_BINDING = (.+)$/m;
const URL_LITERAL_RE = /^\s*url = '((?:[^'\\]|\\.)*)'$/m;
const URL_FSTRING_RE = /^\s*url = f'((?:[^'\\]|\\.)*)'$/m;
const PLACEHOLDER_RE = /\{quote\(str\((\w+)\), safe=""\)\}/g;
const SUFFIX_GUARDED_RE =
  /^\s*if (\w+) is not None and str\(\1\) != '((?:[^'\\]|\\.)*)':\n\s*url = url \+ '\.'/m;
const SUFFIX_PLAIN_RE = /^\s*if (\w+) is not None:\n\s*url = url \+ '\.'/m;
const SETDEFAULT_RE = /^\s*params\.setdefault\('((?:[^'\\]|\\.)*)', '((?:[^'\\]|\\.)*)'\)$/gm;
const QUERY_ASSIGN_RE = /^\s*if (\w+) is not None:\n\s*params\['((?:[^'\\]|\\.)*)'\] = \1$/gm;

function unescape(text: string): string {
  return text.replace(/\\(.)/g, "$1");
}

export function parseEmittedTool(source: string): EmittedTool {
  const funcMatch = FUNC_RE.exec(source);
  if (!funcMatch) throw new Error("no tool function found");

  const bindingMatch = BINDING_RE.exec(source);
  if (!bindingMatch) throw new Error("no EXAMPLE_BINDING found");
  const binding = parsePythonLiteral(bindingMatch[1]);
  if (binding === null || typeof binding !== "object" || Array.isArray(binding)) {
    throw new Error("EXAMPLE_BINDING is not a dict");
  }

  let urlTemplate: string;
  const pathParams: string[] = [];
  const fstring = URL_FSTRING_RE.exec(source);
  if (fstring) {
    urlTemplate = unescape(
      fstring[1].replace(PLACEHOLDER_RE, (_whole, name: string) => {
        pathParams.push(name);
        return `{${name}}`;
      }),
    );
  } else {
    const literal = URL_LITERAL_RE.exec(source);
    if (!literal) throw new Error("no url assignment found");
    urlTemplate = unescape(literal[1]);
  }

  let suffix: SuffixRule | null = null;
  const guarded = SUFFIX_GUARDED_RE.exec(source);
  if (guarded) {
    suffix = { param: guarded[1], skipValue: unescape(guarded[2]) };
  } else {
    const plain = SUFFIX_PLAIN_RE.exec(source);
    if (plain) suffix = { param: plain[1], skipValue: null };
  }

  const frozenParams: Record<string, string> = {};
  for (const match of source.matchAll(SETDEFAULT_RE)) {
    frozenParams[unescape(match[1])] = unescape(match[2]);
  }

  const queryParams: Array<{ arg: string; key: string }> = [];
  for (const match of source.matchAll(QUERY_ASSIGN_RE)) {
    queryParams.push({ arg: match[1], key: unescape(match[2]) });
  }

  return {
    name: funcMatch[1],
    binding: binding as Record<string, PyValue>,
    urlTemplate,
    pathParams,
    suffix,
    frozenParams,
    queryParams,
  };
}

/** Percent-encode everything outside the RFC 3986 unreserved set. */
export function pyQuote(value: string): string {
  let out = "";
  const bytes = Buffer.from(value, "utf-8");
  for (const byte of bytes) {
    const ch = String.fromCharCode(byte);
    if (/[A-Za-z0-9_.~-]/.test(ch)) {
      out += ch;
    } else {
      out += "%" + byte.toString(16).toUpperCase().padStart(2, "0");
    }
  }
  return out;
}

function lookupBinding(tool: EmittedTool, arg: string): PyValue | undefined {
  if (arg in tool.binding) return tool.binding[arg];
  // Argument names are sanitized parameter names; fall back to a key whose
  // sanitized form matches.
  for (const [key, value] of Object.entries(tool.binding)) {
    if (key.replace(/\W/g, "_") === arg) return value;
  }
  return undefined;
}

/** Rebuild the request URL the tool function would issue for its binding. */
export function buildRequestUrl(tool: EmittedTool): string {
  let url = tool.urlTemplate;
  for (const name of tool.pathParams) {
    const value = lookupBinding(tool, name);
    if (value === undefined || value === null) {
      throw new Error(`binding has no value for path parameter ${name}`);
    }
    url = url.replace(`{${name}}`, pyQuote(String(value)));
  }
  if (tool.suffix) {
    const value = lookupBinding(tool, tool.suffix.param);
    if (
      value !== undefined &&
      value !== null &&
      String(value) !== tool.suffix.skipValue
    ) {
      url += "." + pyQuote(String(value));
    }
  }
  const query = new URLSearchParams();
  for (const [key, value] of Object.entries(tool.frozenParams)) {
    query.set(key, value);
  }
  for (const { arg, key } of tool.queryParams) {
    const value = lookupBinding(tool, arg);
    if (value !== undefined && value !== null) {
      query.set(key, String(value));
    }
  }
  const rendered = query.toString();
  return rendered ? `${url}?${rendered}` : url;
}
