# This file is part of ts_snapfaas.
#
# Developed for the Vera Rubin Observatory Systems.
# This product includes software developed by the LSST Project
# (https://www.lsst.org).
# See the COPYRIGHT file at the top-level directory of this distribution
# for details of code ownership.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.

__all__ = ["Page", "make_pages", "filled_pages", "zero_page", "LayeredMemory"]

import functools
import typing

import numpy as np

from .enums import PagePolicy
from .errors import PageOutOfRange
from .utils import fill_page_array, page_digests, zero_page_array, zero_page_digest


class Page:
    """Immutable page content with its FNV-1a 64 digest.

    Parameters
    ----------
    data : `numpy.ndarray`
        Read-only page bytes of type uint8.
    digest : `int`
        FNV-1a 64 digest of the bytes.
    """

    __slots__ = ("data", "digest")

    def __init__(self, data: np.ndarray, digest: int) -> None:
        self.data = data
        self.digest = digest

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Page):
            return NotImplemented
        return (self.digest == other.digest) and bool(np.array_equal(self.data, other.data))

    def __hash__(self) -> int:
        return hash(self.digest)

    def __repr__(self) -> str:
        return f"Page(size={self.data.shape[0]}, digest=0x{self.digest:016x})"

    def tobytes(self) -> bytes:
        return self.data.tobytes()


def make_pages(pages: np.ndarray) -> tuple[Page, ...]:
    """Wrap the rows of a page array.

    The array is made read-only and every page shares its memory.

    Parameters
    ----------
    pages : `numpy.ndarray`
        Array of shape (page_count, page_size) and type uint8.

    Returns
    -------
    `tuple` [`Page`]
        Pages.
    """

    pages.flags.writeable = False
    digests = page_digests(pages)
    return tuple(Page(pages[index], int(digest)) for index, digest in enumerate(digests))


@functools.lru_cache(maxsize=512)
def filled_pages(
    workload_seed: int, step_seed: int, start_page: int, page_count: int, page_size: int
) -> tuple[Page, ...]:
    """Pages written by a Write step.

    Parameters
    ----------
    workload_seed : `int`
        Seed of the workload.
    step_seed : `int`
        Effective seed of the step.
    start_page : `int`
        First page id.
    page_count : `int`
        Number of pages.
    page_size : `int`
        Page size in bytes.

    Returns
    -------
    `tuple` [`Page`]
        Pages in id order.
    """
    return make_pages(fill_page_array(workload_seed, step_seed, start_page, page_count, page_size))


@functools.lru_cache(maxsize=8)
def zero_page(page_size: int) -> Page:
    """Zero page.

    Parameters
    ----------
    page_size : `int`
        Page size in bytes.

    Returns
    -------
    `Page`
        Zero page.
    """
    return Page(zero_page_array(page_size), zero_page_digest(page_size))


class LayeredMemory:
    """Guest memory resolved page by page through the restore layers.

    A page resolves to its private copy if there is one, otherwise by its
    policy: the eagerly loaded page, the shared base page, a demand load
    from the disk file or the zero page.

    Parameters
    ----------
    memory_pages : `int`
        Number of addressable pages.
    page_size : `int`
        Page size in bytes.
    policy_map : `dict` [`int`, `PagePolicy`] or None, optional
        Policy of each page. Pages absent from the map are zero-filled.
        (the default is None)
    shared : `typing.Mapping` [`int`, `Page`] or None, optional
        Shared in-memory base image. (the default is None)
    disk : `typing.Mapping` [`int`, `Page`] or None, optional
        Disk-backed snapshot pages. (the default is None)

    Attributes
    ----------
    memory_pages : `int`
        Number of addressable pages.
    page_size : `int`
        Page size in bytes.
    policy_map : `dict` [`int`, `PagePolicy`]
        Policy of each page.
    private : `dict` [`int`, `Page`]
        Pages owned by this instance.
    eager : `dict` [`int`, `Page`]
        Pages loaded in batch at boot.
    disk_faults : `set` [`int`]
        Pages loaded by a synchronous disk fault.
    cow_faults : `set` [`int`]
        Shared pages copied on the first write.
    """

    def __init__(
        self,
        memory_pages: int,
        page_size: int,
        policy_map: dict[int, PagePolicy] | None = None,
        shared: typing.Mapping[int, Page] | None = None,
        disk: typing.Mapping[int, Page] | None = None,
    ) -> None:
        self.memory_pages = memory_pages
        self.page_size = page_size

        self.policy_map: dict[int, PagePolicy] = dict() if policy_map is None else policy_map

        self._shared: typing.Mapping[int, Page] = dict() if shared is None else shared
        self._disk: typing.Mapping[int, Page] = dict() if disk is None else disk

        self.private: dict[int, Page] = dict()
        self.eager: dict[int, Page] = dict()

        self.disk_faults: set[int] = set()
        self.cow_faults: set[int] = set()

        self._zero = zero_page(page_size)

    def load_eager(self, page_ids: typing.Iterable[int]) -> int:
        """Load the pages from the disk file in one batch.

        Parameters
        ----------
        page_ids : `typing.Iterable` [`int`]
            Pages to load.

        Returns
        -------
        `int`
            Number of loaded pages.
        """

        for page_id in page_ids:
            self.eager[page_id] = self._disk[page_id]

        return len(self.eager)

    def policy_of(self, page_id: int) -> PagePolicy:
        """Current policy of the page.

        Parameters
        ----------
        page_id : `int`
            Page id.

        Returns
        -------
        enum `PagePolicy`
            Policy.
        """

        if page_id in self.private:
            return PagePolicy.ResidentPrivate
        return self.policy_map.get(page_id, PagePolicy.ZeroFill)

    def _check_range(self, start_page: int, page_count: int) -> None:
        if start_page < 0 or (start_page + page_count > self.memory_pages):
            raise PageOutOfRange(
                f"Pages [{start_page}, {start_page + page_count}) are not within [0, {self.memory_pages})."
            )

    def resolve(self, page_id: int) -> Page:
        """Resolve the page without charging any fault.

        Parameters
        ----------
        page_id : `int`
            Page id.

        Returns
        -------
        `Page`
            Content of the page.
        """

        page = self.private.get(page_id)
        if page is not None:
            return page

        match self.policy_map.get(page_id, PagePolicy.ZeroFill):
            case PagePolicy.EagerDisk:
                return self.eager.get(page_id) or self._disk[page_id]
            case PagePolicy.SharedCow:
                return self._shared[page_id]
            case PagePolicy.DemandDisk:
                return self._disk[page_id]
            case _:
                return self._zero

    def _touch(self, page_id: int) -> Page:
        page = self.private.get(page_id)
        if page is not None:
            return page

        match self.policy_map.get(page_id, PagePolicy.ZeroFill):
            case PagePolicy.EagerDisk:
                return self.eager[page_id]
            case PagePolicy.SharedCow:
                return self._shared[page_id]
            case PagePolicy.DemandDisk:
                page = self._disk[page_id]
                self.disk_faults.add(page_id)
                self.private[page_id] = page
                return page
            case _:
                return self._zero

    def read_range(self, start_page: int, page_count: int) -> list[Page]:
        """Read the pages, charging the demand faults.

        Parameters
        ----------
        start_page : `int`
            First page id.
        page_count : `int`
            Number of pages.

        Returns
        -------
        `list` [`Page`]
            Pages in id order.

        Raises
        ------
        PageOutOfRange
            If a page is not addressable.
        """

        self._check_range(start_page, page_count)
        return [self._touch(page_id) for page_id in range(start_page, start_page + page_count)]

    def touch(self, page_ids: typing.Iterable[int]) -> None:
        """Read the pages for their side effects only.

        Parameters
        ----------
        page_ids : `typing.Iterable` [`int`]
            Page ids.

        Raises
        ------
        PageOutOfRange
            If a page is not addressable.
        """

        for page_id in page_ids:
            self._check_range(page_id, 1)
            self._touch(page_id)

    def write_range(self, start_page: int, pages: typing.Sequence[Page]) -> None:
        """Write the pages, charging the copy-on-write and demand faults.

        A demand page written before being read is loaded first.

        Parameters
        ----------
        start_page : `int`
            First page id.
        pages : `typing.Sequence` [`Page`]
            New content of the pages.

        Raises
        ------
        PageOutOfRange
            If a page is not addressable.
        """

        self._check_range(start_page, len(pages))
        for page_id, page in enumerate(pages, start=start_page):
            if page_id not in self.private:
                match self.policy_map.get(page_id):
                    case PagePolicy.SharedCow:
                        self.cow_faults.add(page_id)
                    case PagePolicy.DemandDisk:
                        self.disk_faults.add(page_id)

            self.private[page_id] = page

    def resolve_all(self) -> list[Page]:
        """Resolve every page in index order without charging any fault.

        Returns
        -------
        `list` [`Page`]
            Pages.
        """
        return [self.resolve(page_id) for page_id in range(self.memory_pages)]

    def make_resident(self) -> None:
        """Make every non-zero page private, as in a warm instance."""

        for page_id in self.policy_map:
            if page_id not in self.private:
                self.private[page_id] = self.resolve(page_id)
