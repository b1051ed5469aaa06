from .base import AnnotationProvider, EmbeddingProvider, Triple
from .reference import ReferenceEmbedder, ReferenceProvider
from .cache import CachedAnnotationProvider
from .http import HttpProvider, HttpProviderConfig

__all__ = [
    "AnnotationProvider",
    "EmbeddingProvider",
    "Triple",
    "ReferenceEmbedder",
    "ReferenceProvider",
    "CachedAnnotationProvider",
    "HttpProvider",
    "HttpProviderConfig",
]
