import csv
import json
import os
from typing import Any, Dict, Sequence

from domain.entities.reports import jsonable
from domain.repositories.interfaces import IArtifactRepository


class FileArtifactRepository(IArtifactRepository):
    """Writes run artifacts under one output directory; nothing outside it is touched."""

    def __init__(self, base_dir: str):
        self.base_dir = os.path.abspath(base_dir)
        os.makedirs(self.base_dir, exist_ok=True)

    def path(self, name: str) -> str:
        full = os.path.abspath(os.path.join(self.base_dir, name))
        if os.path.commonpath([full, self.base_dir]) != self.base_dir:
            raise ValueError(f"Artifact {name!r} escapes {self.base_dir}")
        os.makedirs(os.path.dirname(full), exist_ok=True)
        return full

    def write_json(self, name: str, payload: Dict[str, Any]) -> str:
        target = self.path(name)
        with open(target, "w", encoding="utf-8") as f:
            json.dump(jsonable(payload), f, indent=2, sort_keys=True, allow_nan=True)
            f.write("\n")
        return target

    def write_rows(self, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
        target = self.path(name)
        with open(target, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        return target

    def merge_rows(self, names: Sequence[str], target: str) -> str:
        header, rows = None, []
        for name in names:
            with open(self.path(name), "r", encoding="utf-8", newline="") as f:
                reader = csv.reader(f)
                file_header = next(reader)
                if header is None:
                    header = file_header
                elif file_header != header:
                    raise ValueError(f"{name} header {file_header} differs from {header}")
                rows.extend(reader)
        return self.write_rows(target, header or [], rows)
