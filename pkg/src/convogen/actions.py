"""Action handlers: the back-end logic intents invoke on completion.

A handler is called as ``handler(fills, store, session)`` where ``fills`` maps
parameter names (including those carried by active contexts) to values and
``store`` is the session's :class:`~convogen.store.StoreView`. It returns a
mapping whose keys feed ``%key`` placeholders in the intent's responses.
"""
from __future__ import annotations

from decimal import Decimal, InvalidOperation
from typing import Callable, Mapping

Handler = Callable[..., Mapping[str, str]]


class DuplicateHandler(ValueError):
    pass


class UnknownAction(LookupError):
    pass


class ActionRegistry:
    def __init__(self):
        self._handlers: dict[str, Handler] = {}

    def register(self, handler_id: str, handler: Handler) -> Handler:
        if handler_id in self._handlers:
            raise DuplicateHandler(handler_id)
        self._handlers[handler_id] = handler
        return handler

    def unregister(self, handler_id: str) -> None:
        self._handlers.pop(handler_id, None)

    def get(self, handler_id: str) -> Handler:
        try:
            return self._handlers[handler_id]
        except KeyError:
            raise UnknownAction(handler_id) from None

    def __contains__(self, handler_id: str) -> bool:
        return handler_id in self._handlers


registry = ActionRegistry()


def register_action(handler_id: str, handler: Handler | None = None):
    """Register ``handler`` globally; usable as a decorator when ``handler`` is omitted."""
    if handler is None:
        return lambda fn: registry.register(handler_id, fn)
    return registry.register(handler_id, handler)


def unregister_action(handler_id: str) -> None:
    registry.unregister(handler_id)


# -- bundled handlers --------------------------------------------------------

SLOT_FREE = "Yes It is fine!"
SLOT_TAKEN = "I'm sorry, there are no slots available"


@register_action("check_slot")
def check_slot(fills, store, session):
    key = f"{fills.get('date', '')} {fills.get('time', '')}".strip()
    if store.get(key) is not None:
        return {"result": SLOT_TAKEN}
    store.put(key, fills.get("AppointmentType", ""))
    return {"result": SLOT_FREE}


# Units per US dollar.
RATES = {
    "USD": Decimal("1"),
    "EUR": Decimal("0.9214"),
    "GBP": Decimal("0.7905"),
    "JPY": Decimal("151.37"),
}
CURRENCY_CODES = {"dollars": "USD", "euros": "EUR", "pounds": "GBP", "yen": "JPY"}


def _code(name: str) -> str | None:
    name = name.strip()
    if name.upper() in RATES:
        return name.upper()
    return CURRENCY_CODES.get(name.casefold())


def convert_amount(amount: str, source: str, target: str) -> str:
    value = Decimal(amount) * RATES[target] / RATES[source]
    text = format(value.quantize(Decimal("0.001")), "f")
    return text.rstrip("0").rstrip(".") if "." in text else text


@register_action("convert_currency")
def convert_currency(fills, store, session):
    source = _code(fills.get("from", "USD"))
    target = _code(fills.get("to", ""))
    try:
        amount = Decimal(fills.get("amount", ""))
    except InvalidOperation:
        amount = None
    if source is None or target is None or amount is None:
        return {"result": "Invalid currency conversion parameters"}
    return {
        "result": convert_amount(fills["amount"], source, target),
        "amount": fills["amount"],
        "from": source,
        "to": target,
    }


@register_action("book_room")
def book_room(fills, store, session):
    room = fills.get("room", "")
    if store.get(room) is not None:
        return {"result": f"Sorry, the {room} room is already booked."}
    store.put(room, fills.get("date", ""))
    return {"result": f"Done! The {room} room is booked for you."}


@register_action("cancel_rooms")
def cancel_rooms(fills, store, session):
    if store.clear() == 0:
        return {"result": "You have no reservations to cancel."}
    return {"result": "Your reservations have been cancelled."}


@register_action("list_rooms")
def list_rooms(fills, store, session):
    rooms = [i.key for i in store.items()]
    if not rooms:
        return {"result": "You have no reservations."}
    return {"result": "You have booked: " + ", ".join(rooms) + "."}
