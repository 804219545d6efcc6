"""
CSV artifact repository for scans, sampler streams and plot data.

Layout of a file:

    # config: {"format":"csv",...}
    # config_hash: 3f1c...
    # I_k: 0.5,1.25            (metadata, one line per key)
    n,B,c,A_n,...
    27,9,1,1.2345678901234567,...

Floats use 17 significant digits, enough to read back the same double.
"""
import csv
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from entities.job_config import JobConfig
from entities.table_artifact import TableArtifact
from repositories.base_repository import BaseRepository

logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

FLOAT_FORMAT = '%.17g'
_COMMENT = '# '


def format_cell(value: Any) -> str:
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % float(value)
    return str(getattr(value, 'value', value))


def parse_cell(text: str) -> Any:
    """Inverse of format_cell for numbers, booleans and empty cells."""
    if text == '':
        return None
    if text in ('true', 'false'):
        return text == 'true'
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


class CsvArtifactRepository(BaseRepository[TableArtifact]):
    """
    Repository of TableArtifacts stored as CSV files under a root directory.
    """

    suffix = '.csv'

    def __init__(self, root: Union[str, Path]):
        super().__init__(root)

    def save(self, entity: TableArtifact) -> TableArtifact:
        path = self.path_for(entity.artifact_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        logger.info(f"Saving CSV artifact {entity.artifact_id} ({len(entity.rows)} rows)")
        with open(path, 'w', encoding='utf-8', newline='') as handle:
            handle.write(self.render(entity))
        return entity

    def render(self, entity: TableArtifact) -> str:
        buffer = io.StringIO()
        if entity.config is not None:
            buffer.write(f"{_COMMENT}config: {entity.config.canonical_json()}\n")
            buffer.write(f"{_COMMENT}config_hash: {entity.config.content_hash()}\n")
        for key in sorted(entity.metadata):
            buffer.write(f"{_COMMENT}{key}: {entity.metadata[key]}\n")
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(entity.columns)
        for row in entity.rows:
            writer.writerow([format_cell(value) for value in row])
        return buffer.getvalue()

    def find_by_id(self, entity_id: str) -> Optional[TableArtifact]:
        path = self.path_for(entity_id)
        if not path.exists():
            logger.info(f"Artifact {entity_id} not found")
            return None
        data = self._read(entity_id, path.read_text(encoding='utf-8'))
        return self._to_entity(data)

    def find_all(self, filters: Optional[Dict[str, Any]] = None, limit: Optional[int] = None) -> List[TableArtifact]:
        found = []
        for entity_id in self.ids():
            artifact = self.find_by_id(entity_id)
            if self._matches(artifact.metadata, filters):
                found.append(artifact)
            if limit is not None and len(found) >= limit:
                break
        return found

    @staticmethod
    def _read(entity_id: str, text: str) -> Dict[str, Any]:
        lines = text.splitlines()
        metadata: Dict[str, str] = {}
        config = None
        body_start = 0
        for body_start, line in enumerate(lines):
            if not line.startswith(_COMMENT):
                break
            key, _, value = line[len(_COMMENT):].partition(': ')
            if key == 'config':
                config = json.loads(value)
            elif key != 'config_hash':
                metadata[key] = value
        reader = csv.reader(lines[body_start:])
        columns = next(reader, [])
        rows = [[parse_cell(cell) for cell in row] for row in reader]
        return {'artifact_id': entity_id, 'columns': columns, 'rows': rows, 'metadata': metadata, 'config': config}

    def _to_entity(self, data: Dict[str, Any]) -> TableArtifact:
        config = JobConfig.model_validate(data['config']) if data.get('config') else None
        return TableArtifact(artifact_id=data['artifact_id'], columns=data['columns'], rows=data['rows'],
                             metadata=data['metadata'], config=config)

    def _to_dict(self, entity: TableArtifact) -> Dict[str, Any]:
        return {'artifact_id': entity.artifact_id, 'columns': entity.columns, 'rows': entity.rows,
                'metadata': dict(entity.metadata), 'config': entity.config}


def read_floats(artifact: TableArtifact, column: str) -> np.ndarray:
    """A numeric column, empty cells as nan."""
    return np.array([math.nan if value is None else float(value) for value in artifact.column(column)])
