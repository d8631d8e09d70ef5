"""Set-up and tear-down of bot connections around every test.

A :class:`CleaningRoutine` names a connector (``service_id``) and its
parameters. ``set_up`` opens a :class:`Connection` to the bot and its
persistence layer; ``tear_down`` deletes the items the test left behind and
closes the connection.
"""
from __future__ import annotations

import fnmatch
import hashlib
import itertools
from dataclasses import dataclass, field
from typing import Any, Callable

from .agent import AgentDefinition
from .simulator import DETERMINISTIC, BotReply, Session
from .store import Item, PersistenceStore


class ConnectError(RuntimeError):
    pass


class Connection:
    def __init__(self, session: Session, store: PersistenceStore, namespace: str):
        self.session = session
        self.store = store
        self.namespace = namespace

    def send(self, text: str) -> BotReply:
        return self.session.send(text)

    def items(self) -> list[Item]:
        return self.store.items(self.namespace)

    def clean(self, item_filter: str = "*") -> int:
        return self.store.clear(self.namespace, lambda item: fnmatch.fnmatchcase(item.key, item_filter))

    def close(self) -> None:
        self.session.close()


ConnectorFactory = Callable[["CleaningRoutine", int], Connection]
_connectors: dict[str, ConnectorFactory] = {}
_routine_ids = itertools.count(1)


def register_connector(service_id: str, factory: ConnectorFactory) -> None:
    _connectors[service_id] = factory


def derive_seed(base: int, salt: str | None) -> int:
    if salt is None:
        return base
    digest = hashlib.blake2b(f"{base}:{salt}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


@dataclass
class CleaningRoutine:
    """``connect_params`` for the local simulator: ``agent`` (required),
    ``mode``, ``seed``, ``store`` (a PersistenceStore), ``store_path``,
    ``namespace``.  ``item_filter`` is a glob over item keys."""

    service_id: str = "local-sim"
    connect_params: dict[str, Any] = field(default_factory=dict)
    item_filter: str = "*"
    enabled: bool = True     # False skips cleaning, leaving a dirty environment
    _conn: Connection | None = field(default=None, init=False, repr=False)
    _store: PersistenceStore | None = field(default=None, init=False, repr=False)
    _namespace: str = field(default="", init=False, repr=False)

    def __post_init__(self):
        self._namespace = self.connect_params.get("namespace") or f"routine-{next(_routine_ids)}"

    @property
    def connection(self) -> Connection | None:
        return self._conn

    @property
    def agent(self) -> AgentDefinition:
        return self.connect_params["agent"]

    def store(self) -> PersistenceStore:
        if self._store is None:
            store = self.connect_params.get("store")
            if store is None:
                try:
                    store = PersistenceStore(self.connect_params.get("store_path"))
                except OSError as exc:
                    raise ConnectError(str(exc)) from None
            self._store = store
        return self._store

    @property
    def namespace(self) -> str:
        return self._namespace

    def clone(self, **params) -> "CleaningRoutine":
        """A routine on the same service with a fresh namespace and store."""
        merged = {k: v for k, v in self.connect_params.items() if k not in ("namespace", "store")}
        merged.update(params)
        return CleaningRoutine(self.service_id, merged, self.item_filter, self.enabled)


def local_routine(agent: AgentDefinition, mode: str = DETERMINISTIC, seed: int = 0,
                  **params) -> CleaningRoutine:
    return CleaningRoutine("local-sim", {"agent": agent, "mode": mode, "seed": seed, **params})


def _local_sim(cr: CleaningRoutine, seed: int) -> Connection:
    agent = cr.connect_params.get("agent")
    if agent is None:
        raise ConnectError("local-sim needs an 'agent' connect parameter")
    store = cr.store()
    session = Session(agent, seed, cr.connect_params.get("mode", DETERMINISTIC),
                      store=store, namespace=cr.namespace,
                      **({"today": cr.connect_params["today"]} if "today" in cr.connect_params else {}))
    return Connection(session, store, cr.namespace)


register_connector("local-sim", _local_sim)


def set_up(cr: CleaningRoutine, salt: str | None = None) -> Connection:
    """Open a connection. ``salt`` varies the RNG stream per run in seeded-random mode."""
    if cr._conn is not None:
        raise ConnectError("already open")
    factory = _connectors.get(cr.service_id)
    if factory is None:
        raise ConnectError(cr.service_id)
    seed = derive_seed(int(cr.connect_params.get("seed", 0)), salt)
    cr._conn = factory(cr, seed)
    return cr._conn


def tear_down(cr: CleaningRoutine) -> None:
    conn = cr._conn
    if conn is not None:
        if cr.enabled and len(conn.items()) >= 1:
            conn.clean(cr.item_filter)
        conn.close()
    cr._conn = None
    return None
