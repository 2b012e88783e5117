from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Sequence


class IArtifactRepository(ABC):
    @abstractmethod
    def write_json(self, name: str, payload: Dict[str, Any]) -> str:
        """Write a JSON document; returns its path."""
        pass

    @abstractmethod
    def write_rows(self, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
        """Write a CSV table; returns its path."""
        pass

    @abstractmethod
    def merge_rows(self, names: Sequence[str], target: str) -> str:
        """Concatenate CSV tables sharing a header into target."""
        pass

    @abstractmethod
    def path(self, name: str) -> str:
        pass


class IPlotRenderer(ABC):
    @abstractmethod
    def line_plot(self, path: str, x: Sequence[float], series: Dict[str, Sequence[float]], xlabel: str,
                  ylabel: str, title: str, log_x: bool = False, log_y: bool = False) -> str:
        pass

    @abstractmethod
    def bar_plot(self, path: str, values: Sequence[float], xlabel: str, ylabel: str, title: str,
                 log_y: bool = False, threshold: Optional[float] = None) -> str:
        pass
