"""Named parameter registry, initialisation and the checkpoint archive."""

import json
import logging
import zipfile
from collections.abc import Iterator
from typing import Any

import numpy as np

from app.errors import CheckpointError, VersionError
from app.model.autodiff import DTYPE, Parameter

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
META_KEY = "__meta__"


class ParameterStore:
    """Owns every :class:`Parameter` of a model, keyed by dotted name."""

    def __init__(self, seed: int = 1):
        self.rng = np.random.default_rng(seed)
        self._params: dict[str, Parameter] = {}

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __iter__(self) -> Iterator[Parameter]:
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def add(self, param: Parameter) -> Parameter:
        if param.name in self._params:
            raise KeyError(f"duplicate parameter {param.name}")
        self._params[param.name] = param
        return param

    def matrix(self, name: str, rows: int, cols: int, trainable: bool = True) -> Parameter:
        limit = np.sqrt(6.0 / (rows + cols))
        return self.add(Parameter.create(name, self.rng.uniform(-limit, limit, (rows, cols)), trainable))

    def vector(self, name: str, size: int, trainable: bool = True) -> Parameter:
        limit = np.sqrt(6.0 / (size + 1))
        return self.add(Parameter.create(name, self.rng.uniform(-limit, limit, size), trainable))

    def bias(self, name: str, size: int, fill: float = 0.0) -> Parameter:
        return self.add(Parameter.create(name, np.full(size, fill, dtype=DTYPE)))

    def table(self, name: str, values: np.ndarray, trainable: bool) -> Parameter:
        return self.add(Parameter.create(name, values, trainable))

    def trainable(self) -> list[Parameter]:
        return [p for p in self._params.values() if p.trainable]

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.zero_grad()

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: p.value.copy() for name, p in self._params.items()}

    def restore(self, state: dict[str, np.ndarray]) -> None:
        missing = set(self._params) - set(state)
        if missing:
            raise CheckpointError(f"checkpoint lacks parameters: {', '.join(sorted(missing))}")
        for name, p in self._params.items():
            p.assign(state[name])


def save_checkpoint(path: str, store: ParameterStore, meta: dict[str, Any]) -> None:
    header = dict(meta, format_version=FORMAT_VERSION)
    arrays = {name: np.ascontiguousarray(p.value, dtype=DTYPE) for name, p in store._params.items()}
    arrays[META_KEY] = np.array(json.dumps(header, ensure_ascii=False))
    # an open handle keeps numpy from appending ".npz" to the name
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    logger.info("saved %d parameters to %s", len(store), path)


def read_checkpoint(path: str) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    try:
        with np.load(path, allow_pickle=False) as archive:
            if META_KEY not in archive.files:
                raise CheckpointError(f"{path}: not a model checkpoint (no header)")
            meta = json.loads(str(archive[META_KEY]))
            state = {name: archive[name] for name in archive.files if name != META_KEY}
    except CheckpointError:
        raise
    except (OSError, ValueError, zipfile.BadZipFile) as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e

    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionError(f"{path}: checkpoint format {version}, expected {FORMAT_VERSION}")
    return meta, state


__all__ = [
    "ParameterStore",
    "save_checkpoint",
    "read_checkpoint",
    "FORMAT_VERSION",
]
