"""Name -> object lookup for builtin specs and pruning scores."""

from typing import Any, Callable


class Registry:

    def __init__(self, kind: str):

        self.kind = kind

        self._entries: dict[str, Any] = {}

    def register(self, name: str, entry: Any) -> None:

        if name in self._entries:

            raise ValueError(f"{self.kind} '{name}' is already registered")

        self._entries[name] = entry

    def decorate(self, name: str) -> Callable[[Any], Any]:

        def _wrap(entry: Any) -> Any:

            self.register(name, entry)

            return entry

        return _wrap

    def require(self, name: str) -> Any:

        if name not in self._entries:

            known = ", ".join(self.names())

            raise KeyError(f"unknown {self.kind} '{name}' (known: {known})")

        return self._entries[name]

    def has(self, name: str) -> bool:

        return name in self._entries

    def names(self) -> list[str]:

        return list(self._entries.keys())
