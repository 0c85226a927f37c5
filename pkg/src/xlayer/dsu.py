from __future__ import annotations

from typing import Generic, Hashable, Iterable, Iterator, TypeVar

T = TypeVar("T", bound=Hashable)


class DisjointSet(Generic[T]):
    """Union-find with path halving and union by size. Items are added on first touch."""

    def __init__(self, items: Iterable[T] = ()):
        self._parent: dict[T, T] = {}
        self._size: dict[T, int] = {}
        for x in items:
            self.add(x)

    def __len__(self) -> int:
        return len(self._parent)

    def __contains__(self, x: T) -> bool:
        return x in self._parent

    def add(self, x: T) -> None:
        if x not in self._parent:
            self._parent[x] = x
            self._size[x] = 1

    def find(self, x: T) -> T:
        self.add(x)
        parent = self._parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, x: T, y: T) -> T:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return rx
        if self._size[rx] < self._size[ry]:
            rx, ry = ry, rx
        self._parent[ry] = rx
        self._size[rx] += self._size[ry]
        return rx

    def union_all(self, xs: Iterable[T]) -> None:
        it = iter(xs)
        first = next(it, None)
        if first is None:
            return
        self.add(first)
        for x in it:
            self.union(first, x)

    def connected(self, x: T, y: T) -> bool:
        return self.find(x) == self.find(y)

    def groups(self) -> list[set[T]]:
        by_root: dict[T, set[T]] = {}
        for x in self._parent:
            by_root.setdefault(self.find(x), set()).add(x)
        return list(by_root.values())

    def __iter__(self) -> Iterator[T]:
        return iter(self._parent)
