import csv
import io
import json
from pathlib import Path
from typing import Any, Iterable, List, Sequence

from app.utils.exceptions import ArtifactStorageError
from app.utils.logger import logger


class ArtifactStorage:
    """Writes run artifacts into one output directory and remembers their paths"""

    def __init__(self, out_dir: str):
        try:
            self.root = Path(out_dir)
            self.root.mkdir(parents=True, exist_ok=True)
            self._paths: List[Path] = []
            logger.debug("ArtifactStorage initialized", out_dir=str(self.root))
        except OSError as e:
            logger.error("Failed to create output directory", out_dir=out_dir, error=str(e))
            raise ArtifactStorageError(
                f"Output directory initialization failed: {e}", {"out_dir": out_dir}
            )

    @property
    def paths(self) -> List[str]:
        return [str(p) for p in self._paths]

    def write_text(self, name: str, content: str) -> Path:
        """Store a text artifact"""
        try:
            if not name:
                raise ValueError("Artifact name cannot be empty")
            if not content:
                raise ValueError(f"Artifact '{name}' is empty")

            path = self.root / name
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="\n") as handle:
                handle.write(content)
            if path not in self._paths:
                self._paths.append(path)
            logger.debug("Artifact written", path=str(path), size=len(content))
            return path

        except ValueError as e:
            logger.error("Validation error writing artifact", name=name, error=str(e))
            raise ArtifactStorageError(f"Failed to write artifact: {e}", {"name": name})
        except OSError as e:
            logger.error("I/O error writing artifact", name=name, error=str(e))
            raise ArtifactStorageError(
                f"Unexpected error during artifact write: {e}", {"name": name}
            )

    def write_json(self, name: str, document: Any) -> Path:
        content = json.dumps(document, indent=2, sort_keys=True, default=str) + "\n"
        return self.write_text(name, content)

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])
        return self.write_text(name, buffer.getvalue())


def _format_cell(value: Any) -> Any:
    if isinstance(value, float):
        return repr(value)
    return value
