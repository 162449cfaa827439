"""Test scaffolding: build the documentation corpus, run the pipeline, and
keep the mock API server alive while the conformance tests execute.

Prints one JSON line {"mock": host:port, "export_dir": path} on stdout, then
blocks until stdin closes.
"""

import json
import sys
import tempfile
from pathlib import Path

from doc2tool.pipeline import PipelineConfig, run_all
from doc2tool.testkit import build_corpus, corpus_routes, start_mock


def main() -> int:
    mock = start_mock(corpus_routes())
    workdir = Path(tempfile.mkdtemp(prefix="conformance_"))
    build = build_corpus(mock.base_url, workdir / "corpus")
    cfg = PipelineConfig(
        input=str(build.docs_dir),
        out=str(workdir / "artifacts"),
        llm_backend=f"scripted:{build.oracle_dir}",
        courtesy_delay=0.02,
        timeout_secs=10,
    )
    run_all(cfg)
    handshake = {
        "mock": mock.address,
        "export_dir": str(cfg.out_dir() / "export"),
    }
    print(json.dumps(handshake), flush=True)
    sys.stdin.read()  # wait for the test runner to hang up
    mock.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
