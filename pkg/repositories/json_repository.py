"""
JSON artifact repository for certificates and reports.

Each artifact is one pretty-printed file with sorted keys:

    {"artifact": {...}, "config": {...}, "config_hash": "...", "type": "Certificate"}

Floats are written by `json` with repr precision and +-inf as Infinity, so
files round-trip losslessly and repeated runs write identical bytes.
"""
import hashlib
import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Generic, List, Optional, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel

from entities.job_config import JobConfig
from repositories.base_repository import BaseRepository

logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

M = TypeVar('M', bound=BaseModel)


def to_plain(value: Any) -> Any:
    """Enums to values, tuples to lists and numpy scalars to Python numbers."""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(key): to_plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, BaseModel):
        return to_plain(value.model_dump())
    return value


def dumps(data: Dict[str, Any]) -> str:
    return json.dumps(data, indent=2, sort_keys=True, allow_nan=True) + "\n"


def content_id(entity: BaseModel) -> str:
    """First 16 hex digits of the SHA-256 of the artifact's canonical JSON."""
    text = json.dumps(to_plain(entity.model_dump()), sort_keys=True, separators=(',', ':'), allow_nan=True)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()[:16]


class JsonArtifactRepository(BaseRepository[M], Generic[M]):
    """
    Repository for one pydantic artifact type stored as JSON files.
    """

    suffix = '.json'

    def __init__(self, root: Union[str, Path], entity_type: Type[M], config: Optional[JobConfig] = None,
                 id_of: Callable[[M], str] = content_id):
        """
        Args:
            root: Directory of the artifacts
            entity_type: Pydantic model of the artifacts
            config: Job description embedded in every file written
            id_of: Id given to artifacts passed to save()
        """
        super().__init__(root)
        self.entity_type = entity_type
        self.config = config
        self.id_of = id_of

    def save(self, entity: M) -> M:
        return self.save_as(self.id_of(entity), entity)

    def save_as(self, entity_id: str, entity: M) -> M:
        """
        Write the artifact under an explicit id.
        """
        path = self.path_for(entity_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        logger.info(f"Saving {self.entity_type.__name__} artifact {entity_id}")
        path.write_text(dumps(self._to_dict(entity)), encoding='utf-8')
        return entity

    def find_by_id(self, entity_id: str) -> Optional[M]:
        path = self.path_for(entity_id)
        if not path.exists():
            logger.info(f"Artifact {entity_id} not found")
            return None
        try:
            return self._to_entity(json.loads(path.read_text(encoding='utf-8')))
        except (ValueError, KeyError) as e:
            logger.error(f"Error reading artifact {entity_id}: {str(e)}")
            raise

    def find_all(self, filters: Optional[Dict[str, Any]] = None, limit: Optional[int] = None) -> List[M]:
        found = []
        for entity_id in self.ids():
            data = json.loads(self.path_for(entity_id).read_text(encoding='utf-8'))
            if data.get('type') != self.entity_type.__name__:
                continue
            if self._matches(data['artifact'], to_plain(filters or {})):
                found.append(self._to_entity(data))
            if limit is not None and len(found) >= limit:
                break
        return found

    def _to_entity(self, data: Dict[str, Any]) -> M:
        if data.get('type') not in (None, self.entity_type.__name__):
            raise ValueError(f"expected a {self.entity_type.__name__} artifact, found {data.get('type')}")
        return self.entity_type.model_validate(data['artifact'])

    def _to_dict(self, entity: M) -> Dict[str, Any]:
        return {
            'type': self.entity_type.__name__,
            'artifact': to_plain(entity.model_dump()),
            'config': to_plain(self.config.model_dump()) if self.config else None,
            'config_hash': self.config.content_hash() if self.config else None,
        }
