import { describe, expect, it } from "vitest";

import { buildRequestUrl, parseEmittedTool, pyQuote } from "../src/emitted.js";

const PATH_TOOL = `import json
from urllib.parse import quote

import requests


def general_request(profile=None, service=None, coordinates=None, format='json', **kwargs):
    """Example tool."""
    assert profile is not None, 'Missing required parameter: profile'
    url = f'http://127.0.0.1:9999/osrm/{quote(str(profile), safe="")}/{quote(str(service), safe="")}/v1/test/{quote(str(coordinates), safe="")}'
    if format is not None and str(format) != 'json':
        url = url + '.' + quote(str(format), safe='')
    params = dict(kwargs)
    response = requests.get(url=url, params=params, timeout=5)
    return response


EXAMPLE_BINDING = {'profile': 'driving', 'service': 'route', 'coordinates': '13.38,52.51;13.39,52.52', 'format': 'json'}

_tool = general_request
`;

const QUERY_TOOL = `import json
from urllib.parse import quote

import requests


def list_pathways(glycan_id=None, species=None, **kwargs):
    """Example tool."""
    assert glycan_id is not None, 'Missing required parameter: glycan_id'
    url = 'http://127.0.0.1:9999/glyco/pathway'
    params = dict(kwargs)
    params.setdefault('version', '2')
    if glycan_id is not None:
        params['glycan_id'] = glycan_id
    if species is not None:
        params['species'] = species
    response = requests.get(url=url, params=params, timeout=5)
    return response


EXAMPLE_BINDING = {'glycan_id': 'G00048MO'}

_tool = list_pathways
`;

describe("parseEmittedTool", () => {
  it("recovers path parameters and binding from an f-string tool", () => {
    const tool = parseEmittedTool(PATH_TOOL);
    expect(tool.name).toBe("general_request");
    expect(tool.pathParams).toEqual(["profile", "service", "coordinates"]);
    expect(tool.suffix).toEqual({ param: "format", skipValue: "json" });
    expect(tool.binding.profile).toBe("driving");
  });

  it("recovers query assignments and frozen defaults", () => {
    const tool = parseEmittedTool(QUERY_TOOL);
    expect(tool.pathParams).toEqual([]);
    expect(tool.suffix).toBeNull();
    expect(tool.frozenParams).toEqual({ version: "2" });
    expect(tool.queryParams).toEqual([
      { arg: "glycan_id", key: "glycan_id" },
      { arg: "species", key: "species" },
    ]);
  });

  it("rejects sources without the expected shape", () => {
    expect(() => parseEmittedTool("x = 1\n")).toThrow();
    expect(() => parseEmittedTool("def f():\n    pass\n")).toThrow(/EXAMPLE_BINDING/);
  });
});

describe("buildRequestUrl", () => {
  it("percent-encodes path values and skips the suffix at its default", () => {
    const url = buildRequestUrl(parseEmittedTool(PATH_TOOL));
    expect(url).toBe(
      "http://127.0.0.1:9999/osrm/driving/route/v1/test/13.38%2C52.51%3B13.39%2C52.52",
    );
  });

  it("appends the suffix for non-default values", () => {
    const tool = parseEmittedTool(PATH_TOOL);
    tool.binding.format = "csv";
    expect(buildRequestUrl(tool).endsWith(".csv")).toBe(true);
  });

  it("renders bound query parameters and frozen defaults", () => {
    const url = buildRequestUrl(parseEmittedTool(QUERY_TOOL));
    const parsed = new URL(url);
    expect(parsed.pathname).toBe("/glyco/pathway");
    expect(parsed.searchParams.get("glycan_id")).toBe("G00048MO");
    expect(parsed.searchParams.get("version")).toBe("2");
    expect(parsed.searchParams.has("species")).toBe(false);
  });
});

describe("pyQuote", () => {
  it("encodes every reserved character", () => {
    expect(pyQuote("a b/c;d,e")).toBe("a%20b%2Fc%3Bd%2Ce");
    expect(pyQuote("safe-._~X9")).toBe("safe-._~X9");
    expect(pyQuote("naïve")).toBe("na%C3%AFve");
  });
});
