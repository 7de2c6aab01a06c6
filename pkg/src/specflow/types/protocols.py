"""Structural interfaces shared by reports and emitters."""

from __future__ import annotations

from typing import TYPE_CHECKING, Protocol, runtime_checkable


if TYPE_CHECKING:
    from collections.abc import Iterator

    from .aliases import JsonDict


@runtime_checkable
class Serializable(Protocol):
    """Anything that renders itself into a JSON-compatible mapping."""

    def to_dict(self) -> JsonDict: ...


@runtime_checkable
class TabularReport(Protocol):
    """A report with a CSV projection (one row per grid point)."""

    def header(self) -> tuple[str, ...]: ...

    def iter_rows(self) -> Iterator[tuple[float | int | str, ...]]: ...
