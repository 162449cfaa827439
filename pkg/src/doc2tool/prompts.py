"""Prompt builders for every oracle task.

Each builder returns the exact prompt text sent to the completion backend.
Scripted fixtures are keyed by a digest of this text, so any edit here
invalidates the corresponding fixtures on purpose.
"""

from __future__ import annotations

import json
from typing import Any

CONTENT_FILTER_PROMPT = """\
You are screening web pages for REST API documentation.
Answer with a single word: "yes" if the page statically describes one or more
API endpoints (method, URL, parameters), or "no" if it is an index page,
product page, or otherwise contains no directly usable API details.

===
Page content:
{doc}
"""

DOC_QUALITY_PROMPT = """\
You need to group the API documentation with the following standards:

Fully Organized: The documentation follows a well defined template, most likely to be from an API platform. It is well-structured, clear, and easy to understand. It includes detailed descriptions, example code, and explanations of how to use the API.
Semi-Organized: Lacks some structure, but still includes most of the necessary information. It may be missing some examples or descriptions, making it slightly more difficult to understand how to use the API.
Unorganized: Missing example or description, or the structure is unclear, making it difficult to understand how to use the API.

Respond with a JSON object: {{"analysis": "<within 300 characters>", "category": "<Fully Organized|Semi-Organized|Unorganized>"}}

===
API Documentation:
{doc}
"""

EXTRACT_PROMPT = """\
Extract the essential API details from the documentation below into JSON.

The JSON must have this shape:
{{
  "title": "<title of the API or null>",
  "endpoints": [
    {{
      "name": "<name of the endpoint>",
      "description": "<description or null>",
      "method": "<HTTP method>",
      "url": ["<URL of the endpoint, start with http:// or https:// when possible>"],
      "headers": [],
      "required_parameters": [
        {{"name": "...", "type": "...", "description": "...", "default": null, "example": "..."}}
      ],
      "optional_parameters": []
    }}
  ]
}}

For each parameter: "name" is the name of the parameter, "type" its type,
"description" its description (if the parameter is categorical, list all
possible values), "default" its default value, "example" an example value.
Return ONLY the JSON object.

===
API Documentation:
{doc}
"""

JUDGE_PROMPT = """\
Given an API description, response, and Python code, classify the response type:

- information: Valid response containing useful data as expected
- code_error: Error due to bugs in the Python code (syntax, logic, url path doesn't match, etc.)
- server_error: Server-side error (500, service unavailable, authentication error, etc.)
- request_error: Invalid operation due to bad parameters or unsupported operation (only choose this when other errors are not applicable and you think the code is correct but the response is an error)

Respond with a JSON object: {{"response_type": "<label>"}}

API Description: {description}
API Response: {response}
Code: {code}
"""

FINGERPRINT_PROMPT = """\
The API documentation below describes complex or highly flexible endpoints.
Produce up to 10 simplified function fingerprints. Each fingerprint defines a
specific use case along with its expected inputs and outputs, using only
parameters that appear in the documentation.

Respond with a JSON array of objects:
[{{"use_case": "<one sentence>", "inputs": [{{"name": "...", "semantic_type": "...", "example": "..."}}], "output": "<expected result description>"}}]

===
API JSON:
{api_json}
"""

REFINE_PROMPT = """\
You are a Python debugging expert specializing in code analysis and correction. Your will be provided with:
1. Error information.
2. API Json documentation: The API documentation includes all endpoints information. Please refer to the most relevent one based on the similarity of the Python function name and the endpoint's name.
3. Python code containing the function that interacts with APIs: The code may contain syntax errors, parameter issues, or other problems that prevent it from running correctly.
4. Parameters: The parameter examples that are passed to the function.
5. Configuration: The API configuration including base URL, headers, authentication details, and testing information.

Your task is to identify and fix errors in the provided code based on the error information and API documentation.

Requirements:
- IMPORTANT: Return ONLY the corrected code without explanations. The code you answered should be run successfully in a Python environment without any other human modifications.
- DON'T return the code with the wrap of ```python```.
- Ensure the code includes import statements for any necessary libraries.
- If the parameter examples are empty or not given, you should guess the correct values based on the API documentation and include them.
- Please write the doc after refineing the code so that I can directly call code.__doc__. Be sure to include examples of the parameters in the docstring.
- Please check the parameters and make sure they are passed to the url correctly. Add optional parameters to allow custumizerble use of the tool when necessary.
- Use the provided configuration for base URL, headers, and authentication. Replace any hardcoded URLs or headers with the configuration values.
- You should **NEVER** edit the result_dict in main function.

Error Information:
{error}

API Documentation:
{api_doc}

Configuration:
{config}

Code to fix:
{code}

Candidate Parameter Values:
{params}
"""

PARAM_GUESS_PROMPT = """\
You will be provided with the information of an API and its parameters. The example values of the parameters are missing. You need to guess the parameter values.
You may have failed severl times before. If you guess with similar values, you may fail again. Please be innovative and try different values and formats.

Your previous failed guesses:
***history start
{history}
***history end

API Description:
{description}

Parameter Description:
{param_description}

Your Guess:
"""


def content_filter_prompt(doc_text: str) -> str:
    return CONTENT_FILTER_PROMPT.format(doc=doc_text)


def doc_quality_prompt(doc_text: str) -> str:
    return DOC_QUALITY_PROMPT.format(doc=doc_text)


def extract_prompt(doc_text: str) -> str:
    return EXTRACT_PROMPT.format(doc=doc_text)


def judge_prompt(description: str, response_excerpt: str, code: str) -> str:
    return JUDGE_PROMPT.format(
        description=description, response=response_excerpt, code=code
    )


def fingerprint_prompt(api_json: dict[str, Any]) -> str:
    return FINGERPRINT_PROMPT.format(api_json=json.dumps(api_json, indent=2, sort_keys=True))


def refine_prompt(error: str, api_doc: str, config: str, code: str, params: str) -> str:
    return REFINE_PROMPT.format(
        error=error, api_doc=api_doc, config=config, code=code, params=params
    )


def param_guess_prompt(history: list[str], description: str, param_description: str) -> str:
    return PARAM_GUESS_PROMPT.format(
        history="\n".join(history) if history else "(none)",
        description=description,
        param_description=param_description,
    )
