# Batch job description embedded in every artifact header
import hashlib
import json
from enum import Enum
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field


class OutputFormat(str, Enum):
    JSON = 'json'
    CSV = 'csv'


class JobConfig(BaseModel):
    """
    One CLI run: subcommand, its parameters and where the artifact goes.
    """
    subcommand: str
    parameters: Dict[str, Any] = Field(default_factory=dict)
    output: Optional[str] = None
    format: OutputFormat = OutputFormat.JSON

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode='json'), sort_keys=True, separators=(',', ':'))

    def content_hash(self) -> str:
        """SHA-256 of the canonical JSON."""
        return hashlib.sha256(self.canonical_json().encode('utf-8')).hexdigest()
