"""
JSON and CSV readers/writers; every structured output embeds its RunManifest
"""
import csv
import json
import sys
from pathlib import Path
from typing import Iterable, Optional, Sequence, Type, TypeVar, Union

import structlog
from pydantic import BaseModel, ValidationError

from superres.schemas.reports import RunManifest
from superres.utils.exceptions import InvalidInput

logger = structlog.get_logger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)
PathLike = Union[str, Path]


def load_model(path: PathLike, schema: Type[ModelT]) -> ModelT:
    """Parse a JSON file into `schema`; every failure surfaces as InvalidInput"""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InvalidInput(f"cannot read {path}: {e}", "input")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidInput(f"{path} is not valid JSON: {e}", "input")
    if isinstance(data, dict):
        data.pop("manifest", None)
    try:
        return schema.model_validate(data)
    except ValidationError as e:
        raise InvalidInput(f"{path}: {e.errors()[0]['msg']}", "input")


def render_payload(payload: BaseModel, manifest: RunManifest) -> str:
    body = {"manifest": manifest.model_dump(mode="json")}
    body.update(payload.model_dump(mode="json", by_alias=True))
    return json.dumps(body, indent=2)


def write_json(payload: BaseModel, manifest: RunManifest, path: Optional[PathLike] = None) -> None:
    """Write to `path`, or to stdout when no path is given"""
    text = render_payload(payload, manifest)
    if path is None:
        sys.stdout.write(text + "\n")
        return
    try:
        Path(path).write_text(text + "\n")
    except OSError as e:
        raise InvalidInput(f"cannot write {path}: {e}", "output")
    logger.debug("json_written", path=str(path))


def write_csv(
    header: Sequence[str],
    rows: Iterable[Sequence],
    path: Optional[PathLike] = None,
    manifest: Optional[RunManifest] = None,
) -> None:
    """CSV to `path` (or stdout); the manifest goes to a `<path>.manifest.json` sidecar"""
    handle = sys.stdout if path is None else None
    try:
        if handle is None:
            handle = open(path, "w", newline="")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    except OSError as e:
        raise InvalidInput(f"cannot write {path}: {e}", "output")
    finally:
        if path is not None and handle is not None:
            handle.close()
    if path is not None and manifest is not None:
        sidecar = Path(f"{path}.manifest.json")
        try:
            sidecar.write_text(json.dumps(manifest.model_dump(mode="json"), indent=2) + "\n")
        except OSError as e:
            raise InvalidInput(f"cannot write {sidecar}: {e}", "output")
