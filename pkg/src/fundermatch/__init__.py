"""Disambiguate free-text research funder strings against an OpenAlex/ROR organization index."""

from .config import PipelineConfig
from .matcher import Candidate, MatchResult, MatchType
from .normalization import FunderString
from .pipeline import run_match
from .reference_index import OrgRecord, ReferenceIndex, build_index, read_index

__all__ = [
    "Candidate",
    "FunderString",
    "MatchResult",
    "MatchType",
    "OrgRecord",
    "PipelineConfig",
    "ReferenceIndex",
    "build_index",
    "read_index",
    "run_match",
]
__version__ = "0.1.0"
