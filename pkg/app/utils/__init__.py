import functools
import hashlib
import json
import os
from typing import Any, Callable, Iterable

import click
import numpy as np

from app.errors import DataError, SemiCRFError


def validate_config_body(body: dict[Any, Any], known_entries: Iterable[Any]) -> list[Any]:

    """

        body: A flat configuration mapping.
        known_entries: The entries the consumer understands.

        Returns the entries of ``body`` nobody asked for.

    """

    if not isinstance(body, dict):
        return [body]

    known = set(known_entries)
    return sorted(k for k in body if k not in known)


def save_json(path, data):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, ensure_ascii=False)


def checksum(*arrays: np.ndarray) -> str:
    """sha256 over the raw float64 bytes of the given arrays."""
    digest = hashlib.sha256()
    for arr in arrays:
        digest.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
    return digest.hexdigest()


def exits_on_error(command: Callable) -> Callable:
    """Turn toolkit errors into a one-line report and the matching exit code."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except SemiCRFError as e:
            _report(e)
            raise SystemExit(e.exit_code)
        except (click.exceptions.Exit, click.ClickException, click.Abort):
            raise
        except Exception as e:  #* anything else is our bug
            _report(e)
            raise SystemExit(SemiCRFError.exit_code)

    return wrapper


def _report(e: BaseException) -> None:
    message = " ".join(str(e).split())
    click.echo(f"error: {type(e).__name__}: {message}", err=True)


def require_file(path, error=DataError, what="file"):
    if not os.path.isfile(path):
        raise error(f"{what} not found: {path}")
    return path
