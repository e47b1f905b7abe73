"""Exception hierarchy with pipeline-stage attribution.

Every error carries a ``stage`` (ingest / stability / reasoning / density /
service) and a short machine-readable ``code`` so the REST layer and CLI can
report failures uniformly.
"""

from __future__ import annotations


class PlacekitError(Exception):
    """Base class for all package errors."""

    stage = "service"
    code = "internal"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class SceneValidationError(PlacekitError):
    """Scene document violates the schema or a scene invariant.

    ``location`` is a dotted/indexed path into the offending document,
    e.g. ``objects[2].shapes[0].dims``.
    """

    stage = "ingest"
    code = "scene_validation"

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


class ContractViolationError(PlacekitError):
    """A caller broke a documented precondition."""

    stage = "service"
    code = "contract_violation"

    def __init__(self, message: str, stage: str = "service"):
        super().__init__(message)
        self.stage = stage


class UnsupportedGeometryError(PlacekitError):
    """The physics backend cannot handle a shape or shape pair."""

    stage = "stability"
    code = "unsupported_geometry"


class NoReceptacleError(PlacekitError):
    """The scene offers no receptacle candidates to reason over."""

    stage = "reasoning"
    code = "no_receptacle"


class RemoteReasonerError(PlacekitError):
    """The remote chat endpoint failed after the configured retries."""

    stage = "reasoning"
    code = "remote_failure"

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class CompletionParseError(PlacekitError):
    """A chat completion named no known receptacle id."""

    stage = "reasoning"
    code = "completion_parse"

    def __init__(self, message: str, completion: str):
        super().__init__(message)
        self.completion = completion


class NoCandidatesError(PlacekitError):
    """Density support carries no positive weight; both filters are empty."""

    stage = "density"
    code = "no_candidates"


class RunNotFoundError(PlacekitError):
    stage = "service"
    code = "not_found"


class AlreadyPlacedError(PlacekitError):
    stage = "service"
    code = "already_placed"


class BenchValidationError(PlacekitError):
    """A benchmark scenario file is unusable (e.g. missing ground truth)."""

    stage = "service"
    code = "bench_validation"
