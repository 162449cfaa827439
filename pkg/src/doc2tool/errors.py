"""Exception types shared across the pipeline."""


class Doc2ToolError(Exception):
    """Base class for all pipeline errors."""


# --- oracle gateway ---------------------------------------------------------

class OracleError(Doc2ToolError):
    """Base class for model-gateway failures."""


class MissingCredential(OracleError):
    """A live backend was selected but no API key is configured."""


class BackendUnavailable(OracleError):
    """The backend failed after retries, or no backend handles the task."""


class ScriptedFixtureMissing(OracleError):
    """No scripted fixture exists for this request; signals a test gap."""


class EmptyText(OracleError):
    """embed() was called with text that is empty after trimming."""


# --- document ingestion -----------------------------------------------------

class IoFailure(Doc2ToolError):
    """Document could not be read, or was empty."""


class UnsupportedMedia(Doc2ToolError):
    """Document is neither HTML nor Markdown."""


class UnparseableLabel(Doc2ToolError):
    """Oracle returned a label outside the closed enum."""


class SchemaViolation(Doc2ToolError):
    """Extraction output failed schema validation even after one re-ask."""


# --- compilation ------------------------------------------------------------

class MalformedUrl(Doc2ToolError):
    """URL template has unbalanced braces or is otherwise unusable."""


class MissingBaseUrl(Doc2ToolError):
    """Endpoint URL is relative and the document has no base URL."""


class MethodDisallowed(Doc2ToolError):
    """Tool method is outside the active allow-list."""


# --- refinement -------------------------------------------------------------

class GuardViolation(Doc2ToolError):
    """Revision tampered with the protected harness region."""


class UnparseableRevision(Doc2ToolError):
    """Oracle revision could not be parsed back into a ToolSpec."""


# --- knowledge base ---------------------------------------------------------

class UnknownApi(Doc2ToolError):
    """leave_one_api_out was asked to mask an API the KB has never seen."""


# --- export / service -------------------------------------------------------

class NameCollision(Doc2ToolError):
    """Two tools map to the same name or OpenAPI path+method."""


class PortUnavailable(Doc2ToolError):
    """Mock server could not bind its address."""
