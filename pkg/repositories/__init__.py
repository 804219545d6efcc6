# Repositories module
"""
Persistence of artifacts: certificates and reports as JSON, scans, sampler
streams and plot data as CSV.

Usage:
    from repositories import RepositoryFactory, RepositoryType
    from entities.certificate import Certificate

    repo = RepositoryFactory.create(RepositoryType.JSON, "out", Certificate, config=job)
    repo.save_as("h_ineq_k5", certificate)
    certificate = repo.find_by_id("h_ineq_k5")
"""

from repositories.base_repository import IRepository, BaseRepository
from repositories.csv_repository import CsvArtifactRepository
from repositories.json_repository import JsonArtifactRepository
from repositories.repository_factory import RepositoryFactory, RepositoryType

__all__ = [
    'IRepository',
    'BaseRepository',
    'CsvArtifactRepository',
    'JsonArtifactRepository',
    'RepositoryFactory',
    'RepositoryType',
]
