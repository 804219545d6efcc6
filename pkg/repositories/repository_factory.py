"""
Repository factory for artifact repositories.
Caches one repository per (type, root, artifact type).
"""
from enum import Enum
from pathlib import Path
from typing import Dict, Optional, Tuple, Type, Union

from pydantic import BaseModel

from entities.job_config import JobConfig
from repositories.base_repository import IRepository
from repositories.csv_repository import CsvArtifactRepository
from repositories.json_repository import JsonArtifactRepository


class RepositoryType(str, Enum):
    """Storage formats for artifacts"""
    JSON = 'json'
    CSV = 'csv'


class RepositoryFactory:
    """
    Factory for creating repository instances.
    Instances created without a job config are cached.
    """

    _instances: Dict[Tuple[str, str, str], IRepository] = {}

    @staticmethod
    def create(repository_type: RepositoryType, root: Union[str, Path],
               entity_type: Optional[Type[BaseModel]] = None,
               config: Optional[JobConfig] = None) -> IRepository:
        """
        Create a repository.

        Args:
            repository_type: json or csv
            root: Directory of the artifacts
            entity_type: Artifact model, required for json
            config: Job description embedded in the written files

        Raises:
            ValueError: If the type is unknown or json lacks an entity type
        """
        repository_type = RepositoryType(repository_type)
        name = entity_type.__name__ if entity_type is not None else ''
        cache_key = (repository_type.value, str(Path(root)), name)
        if config is None and cache_key in RepositoryFactory._instances:
            return RepositoryFactory._instances[cache_key]

        if repository_type is RepositoryType.JSON:
            if entity_type is None:
                raise ValueError("A JSON repository needs the artifact type")
            repository: IRepository = JsonArtifactRepository(root, entity_type, config=config)
        elif repository_type is RepositoryType.CSV:
            repository = CsvArtifactRepository(root)
        else:
            raise ValueError(f"Unknown repository type: {repository_type}")

        if config is None:
            RepositoryFactory._instances[cache_key] = repository
        return repository

    @staticmethod
    def clear_cache():
        """Clear the repository cache. Useful for testing."""
        RepositoryFactory._instances.clear()
