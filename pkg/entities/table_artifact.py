# Row-oriented artifact: scans, sampler streams and plot data
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from entities.job_config import JobConfig


class TableArtifact(BaseModel):
    """
    A CSV artifact: fixed column header, rows in output order and free-form
    metadata written as comment lines.
    """
    artifact_id: str
    columns: List[str]
    rows: List[List[Any]] = Field(default_factory=list)
    metadata: Dict[str, str] = Field(default_factory=dict)
    config: Optional[JobConfig] = None

    def add_row(self, values: Dict[str, Any]) -> None:
        """Append a row given by column name; missing columns stay empty."""
        unknown = set(values) - set(self.columns)
        if unknown:
            raise ValueError(f"unknown columns: {sorted(unknown)}")
        self.rows.append([values.get(column) for column in self.columns])

    def column(self, name: str) -> List[Any]:
        index = self.columns.index(name)
        return [row[index] for row in self.rows]
