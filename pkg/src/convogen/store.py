"""Namespaced persistence layer behind the simulated chatbot's actions."""
from __future__ import annotations

import json
import os
import re
import tempfile
import threading
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class Item:
    key: str
    payload: str = ""


class PersistenceStore:
    """Sets of items keyed by namespace, enumerated in insertion order.

    With ``path`` set, each namespace lives in ``<path>/<namespace>.json`` as a
    JSON array of ``{"key", "payload"}`` objects.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        if self.path is not None:
            self.path.mkdir(parents=True, exist_ok=True)
            if not os.access(self.path, os.W_OK):
                raise PermissionError(f"store path {self.path} is not writable")
        self._memory: dict[str, dict[str, Item]] = {}
        self._locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._guard = threading.Lock()

    def _lock(self, namespace: str) -> threading.Lock:
        with self._guard:
            return self._locks[namespace]

    def _file(self, namespace: str) -> Path:
        assert self.path is not None
        return self.path / (re.sub(r"[^\w.-]", "_", namespace) + ".json")

    def _read(self, namespace: str) -> dict[str, Item]:
        if self.path is None:
            return dict(self._memory.get(namespace, {}))
        f = self._file(namespace)
        if not f.exists():
            return {}
        return {d["key"]: Item(d["key"], d.get("payload", ""))
                for d in json.loads(f.read_text(encoding="utf-8"))}

    def _write(self, namespace: str, items: dict[str, Item]) -> None:
        if self.path is None:
            self._memory[namespace] = items
            return
        f = self._file(namespace)
        if not items:
            f.unlink(missing_ok=True)
            return
        fd, tmp = tempfile.mkstemp(dir=self.path, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump([{"key": i.key, "payload": i.payload} for i in items.values()], fh)
        os.replace(tmp, f)

    def items(self, namespace: str) -> list[Item]:
        with self._lock(namespace):
            return list(self._read(namespace).values())

    def get(self, namespace: str, key: str) -> Item | None:
        with self._lock(namespace):
            return self._read(namespace).get(key)

    def put(self, namespace: str, key: str, payload: str = "") -> None:
        with self._lock(namespace):
            items = self._read(namespace)
            items[key] = Item(key, payload)
            self._write(namespace, items)

    def delete(self, namespace: str, key: str) -> bool:
        with self._lock(namespace):
            items = self._read(namespace)
            if items.pop(key, None) is None:
                return False
            self._write(namespace, items)
            return True

    def clear(self, namespace: str, predicate=None) -> int:
        """Delete the items matching ``predicate`` (all by default); returns the count."""
        with self._lock(namespace):
            items = self._read(namespace)
            keep = {k: v for k, v in items.items() if predicate is not None and not predicate(v)}
            self._write(namespace, keep)
            return len(items) - len(keep)

    def view(self, namespace: str) -> "StoreView":
        return StoreView(self, namespace)


class StoreView:
    """One namespace of a store, as handed to action handlers."""

    def __init__(self, store: PersistenceStore, namespace: str):
        self.store = store
        self.namespace = namespace

    def items(self) -> list[Item]:
        return self.store.items(self.namespace)

    def get(self, key: str) -> Item | None:
        return self.store.get(self.namespace, key)

    def put(self, key: str, payload: str = "") -> None:
        self.store.put(self.namespace, key, payload)

    def delete(self, key: str) -> bool:
        return self.store.delete(self.namespace, key)

    def clear(self, predicate=None) -> int:
        return self.store.clear(self.namespace, predicate)

    def __len__(self) -> int:
        return len(self.items())
