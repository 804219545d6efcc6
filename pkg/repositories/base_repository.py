"""
Base repository interface and abstract class for artifact persistence.
"""
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Generic, List, Optional, TypeVar, Union

T = TypeVar('T')


class IRepository(ABC, Generic[T]):
    """
    Interface for artifact repositories. All repositories must implement these methods.
    """

    @abstractmethod
    def save(self, entity: T) -> T:
        """
        Save or overwrite an artifact.

        Args:
            entity: The artifact to save

        Returns:
            The saved artifact
        """
        pass

    @abstractmethod
    def find_by_id(self, entity_id: str) -> Optional[T]:
        """
        Find an artifact by its id (the file stem).

        Returns:
            The artifact if found, None otherwise
        """
        pass

    @abstractmethod
    def find_all(self, filters: Optional[Dict[str, Any]] = None, limit: Optional[int] = None) -> List[T]:
        """
        Find all artifacts whose fields equal the given filters, ordered by id.

        Args:
            filters: Optional dictionary of field-value pairs to filter by
            limit: Optional maximum number of results to return
        """
        pass

    @abstractmethod
    def delete(self, entity_id: str) -> bool:
        """
        Delete an artifact by its id.

        Returns:
            True if a file was removed, False otherwise
        """
        pass

    @abstractmethod
    def exists(self, entity_id: str) -> bool:
        pass


class BaseRepository(IRepository[T], ABC):
    """
    Abstract file-backed repository: one artifact per file under `root`.
    """

    suffix = ''

    def __init__(self, root: Union[str, Path]):
        """
        Args:
            root: Directory holding the artifact files; created on demand
        """
        self.root = Path(root)

    def path_for(self, entity_id: str) -> Path:
        if not entity_id or '/' in entity_id or entity_id.startswith('.'):
            raise ValueError(f"Invalid artifact id: {entity_id!r}")
        return self.root / f"{entity_id}{self.suffix}"

    def ids(self) -> List[str]:
        if not self.root.is_dir():
            return []
        return sorted(path.name[:-len(self.suffix)] for path in self.root.glob(f"*{self.suffix}"))

    def delete(self, entity_id: str) -> bool:
        path = self.path_for(entity_id)
        if not path.exists():
            return False
        path.unlink()
        return True

    def exists(self, entity_id: str) -> bool:
        return self.path_for(entity_id).exists()

    @staticmethod
    def _matches(data: Dict[str, Any], filters: Optional[Dict[str, Any]]) -> bool:
        return all(data.get(key) == value for key, value in (filters or {}).items())

    @abstractmethod
    def _to_entity(self, data: Dict[str, Any]) -> T:
        """
        Convert stored data to the artifact object.
        """
        pass

    @abstractmethod
    def _to_dict(self, entity: T) -> Dict[str, Any]:
        """
        Convert the artifact object to plain data for storage.
        """
        pass
