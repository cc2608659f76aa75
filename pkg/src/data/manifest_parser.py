"""Tab-separated dataset manifests."""

import os
from pathlib import Path
from typing import Iterable, List, Optional, Union

from src.config.config_models import TASKS
from src.data.data_models import SPLITS, SampleRecord
from src.errors import ManifestParseError

FIELD_COUNT = 4


class ManifestParser:
    """Reads and writes ``image<TAB>mask<TAB>task<TAB>split`` manifests.

    Relative paths are resolved against the manifest's directory.
    """

    @staticmethod
    def parse_manifest_file(path: Union[str, Path], check_files: bool = True) -> List[SampleRecord]:
        """Parse a manifest file.

        Args:
            path: Manifest location.
            check_files: Also require every referenced file to exist.

        Returns:
            Records in file order.

        Raises:
            ManifestParseError: missing manifest, malformed line, unknown tag
                or missing referenced file; names the line number.
        """
        path = Path(path)
        if not path.exists():
            raise ManifestParseError("manifest not found", path=path)
        try:
            content = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            raise ManifestParseError(f"cannot read manifest: {e}", path=path) from None
        return ManifestParser.parse_manifest_content(content, path.parent, path, check_files)

    @staticmethod
    def parse_manifest_content(
        content: str,
        base_dir: Path,
        source: Optional[Path] = None,
        check_files: bool = True,
    ) -> List[SampleRecord]:
        records: List[SampleRecord] = []
        for line_number, line in enumerate(content.split("\n"), start=1):
            if not line.strip():
                continue
            fields = line.rstrip("\r").split("\t")
            if len(fields) != FIELD_COUNT:
                raise ManifestParseError(
                    f"expected {FIELD_COUNT} tab-separated fields, got {len(fields)}",
                    path=source,
                    line_number=line_number,
                )
            image, mask, task, split = (f.strip() for f in fields)
            if task not in TASKS:
                raise ManifestParseError(
                    f"unknown task tag '{task}' (expected one of {', '.join(TASKS)})",
                    path=source,
                    line_number=line_number,
                )
            if split not in SPLITS:
                raise ManifestParseError(
                    f"unknown split '{split}' (expected one of {', '.join(SPLITS)})",
                    path=source,
                    line_number=line_number,
                )
            image_path = (base_dir / image) if not Path(image).is_absolute() else Path(image)
            mask_path = (base_dir / mask) if not Path(mask).is_absolute() else Path(mask)
            if check_files:
                for kind, ref in (("image", image_path), ("mask", mask_path)):
                    if not ref.is_file():
                        raise ManifestParseError(
                            f"referenced {kind} does not exist: {ref}",
                            path=source,
                            line_number=line_number,
                        )
            records.append(SampleRecord(image_path, mask_path, task, split))
        return records

    @staticmethod
    def format_records(records: Iterable[SampleRecord], base_dir: Path) -> str:
        lines = []
        for record in records:
            image = _relative_to(record.image_path, base_dir)
            mask = _relative_to(record.mask_path, base_dir)
            lines.append("\t".join((image, mask, record.task, record.split)))
        return "".join(line + "\n" for line in lines)


def _relative_to(path: Path, base_dir: Path) -> str:
    try:
        return Path(os.path.relpath(path, base_dir)).as_posix()
    except ValueError:
        return str(path)


def load_manifest(path: Union[str, Path], check_files: bool = True) -> List[SampleRecord]:
    return ManifestParser.parse_manifest_file(path, check_files=check_files)


def write_manifest(path: Union[str, Path], records: Iterable[SampleRecord]) -> Path:
    """Write records with paths relative to the manifest directory (UTF-8, LF)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(ManifestParser.format_records(records, path.parent))
    return path
