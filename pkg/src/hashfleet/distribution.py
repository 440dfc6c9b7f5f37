"""Proportional work distribution over node powers.

Four pure operations used by the coordinator's planner and by the CLI:

* distribute_hashes    - contiguous hash-list slices sized by power share
* distribute_dictionaries - whole wordlists packed against per-node targets
* split_keyspace       - exact partition of the 95**length candidate space
* estimate_time        - attack duration estimates from a node's hash rate

All proportional arithmetic runs on exact rationals (fractions.Fraction
over the float powers), so equal-power ties and integral shares resolve
identically on every platform. Node ordering is always (power descending,
node_id ascending); "weakest first" traversals are that order reversed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import floor
from typing import Mapping, Sequence, TypeVar

from .models import WordlistMeta

CHARSET_SIZE = 95  # printable ASCII 0x20..0x7E

T = TypeVar("T")


class DistributionError(Exception):
    code = "distribution_error"


class EmptyInput(DistributionError):
    code = "empty_input"


class InvalidPower(DistributionError):
    code = "invalid_power"


class NonPositiveRate(DistributionError):
    code = "non_positive_rate"


PowerMap = Mapping[str, float]


def _check_powers(powers: PowerMap) -> None:
    if not powers:
        raise InvalidPower("power map is empty")
    for node_id, p in powers.items():
        if not p > 0:
            raise InvalidPower(f"node {node_id!r} has non-positive power {p!r}")


def nodes_by_power_desc(powers: PowerMap) -> list[str]:
    """Canonical node order: strongest first, ties by ascending node_id."""
    return sorted(powers, key=lambda n: (-Fraction(powers[n]), n))


@dataclass(frozen=True)
class DictDistribution:
    per_node: dict[str, list[str]]  # keys in descending-power order
    removed_nodes: list[str]


@dataclass(frozen=True)
class KeyspaceRange:
    """Half-open index range [start, end) into the 95**length keyspace."""

    start: int
    end: int
    length: int
    charset_size: int = CHARSET_SIZE

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("keyspace length must be >= 1")
        if not (0 <= self.start < self.end <= self.charset_size**self.length):
            raise ValueError(
                f"range [{self.start}, {self.end}) not within "
                f"[0, {self.charset_size}**{self.length})"
            )

    @property
    def size(self) -> int:
        return self.end - self.start


def distribute_hashes(hashes: Sequence[T], powers: PowerMap) -> dict[str, list[T]]:
    """Slice an ordered hash list across nodes proportionally to power.

    Each node's target count is max(1, floor(share * N)). A positive
    remainder is handed out one hash at a time round-robin over nodes in
    descending power order. When the max(1, .) floor over-allocates
    (fewer hashes than nodes), targets are decremented weakest-first
    until they sum to N, which may leave the weakest nodes empty. The
    list is then sliced contiguously, strongest node first.
    """
    if not hashes:
        raise EmptyInput("no hashes to distribute")
    _check_powers(powers)

    total_power = sum(Fraction(p) for p in powers.values())
    n = len(hashes)
    targets = {
        node_id: max(1, floor(Fraction(p) * n / total_power))
        for node_id, p in powers.items()
    }

    order = nodes_by_power_desc(powers)
    remaining = n - sum(targets.values())
    if remaining > 0:
        for i in range(remaining):
            targets[order[i % len(order)]] += 1
    elif remaining < 0:
        excess = -remaining
        while excess > 0:
            for node_id in reversed(order):
                if excess == 0:
                    break
                if targets[node_id] > 0:
                    targets[node_id] -= 1
                    excess -= 1

    distribution: dict[str, list[T]] = {}
    index = 0
    for node_id in order:
        count = targets[node_id]
        distribution[node_id] = list(hashes[index : index + count])
        index += count
    return distribution


def distribute_dictionaries(
    wordlists: Sequence[WordlistMeta], powers: PowerMap
) -> DictDistribution:
    """Assign whole wordlists to nodes against power-proportional targets.

    With fewer wordlists than nodes the weakest surplus nodes are removed
    up front. Each surviving node gets a target of share * total_lines.
    The lightest wordlist goes to the weakest survivor unconditionally;
    the rest are offered in descending size order to the first node
    (strongest first) whose load would stay within target; whatever still
    fits nowhere goes to the node with the most remaining capacity.
    """
    if not wordlists:
        raise EmptyInput("no wordlists to distribute")
    _check_powers(powers)
    sizes = {w.id: w.line_count for w in wordlists}
    if len(sizes) != len(wordlists):
        raise EmptyInput("duplicate wordlist ids")

    order = nodes_by_power_desc(powers)
    removed: list[str] = []
    if len(wordlists) < len(order):
        removed = order[len(wordlists) :]
        order = order[: len(wordlists)]

    total_size = sum(sizes.values())
    total_power = sum(Fraction(powers[n]) for n in order)
    targets = {n: Fraction(powers[n]) * total_size / total_power for n in order}

    assignment: dict[str, list[str]] = {n: [] for n in order}
    loads = {n: 0 for n in order}
    assigned: set[str] = set()

    def place(wl_id: str, node_id: str) -> None:
        assignment[node_id].append(wl_id)
        loads[node_id] += sizes[wl_id]
        assigned.add(wl_id)

    by_size_desc = sorted(sizes, key=lambda w: (-sizes[w], w))
    lightest = min(sizes, key=lambda w: (sizes[w], w))
    place(lightest, order[-1])  # lightest wordlist to weakest node

    for wl_id in by_size_desc:
        if wl_id in assigned:
            continue
        for node_id in order:
            if loads[node_id] + sizes[wl_id] <= targets[node_id]:
                place(wl_id, node_id)
                break

    for w in wordlists:  # leftovers, in input order
        if w.id in assigned:
            continue
        best = min(order, key=lambda n: (loads[n] - targets[n], n))
        place(w.id, best)

    return DictDistribution(per_node=assignment, removed_nodes=removed)


def split_keyspace(length: int, powers: PowerMap) -> dict[str, KeyspaceRange]:
    """Partition [0, 95**length) into contiguous per-node ranges.

    Range widths are floor(share * total), with the remainder spread one
    unit each over the strongest nodes; ranges are laid out in descending
    power order. Nodes whose width comes out zero are omitted.
    """
    if length < 1:
        raise EmptyInput("keyspace length must be >= 1")
    return split_span(0, CHARSET_SIZE**length, length, powers)


def split_span(span_start: int, span_end: int, length: int, powers: PowerMap) -> dict[str, KeyspaceRange]:
    """split_keyspace generalized to an arbitrary sub-span [start, end).

    Used when a lost node's range has to be redistributed over survivors;
    the same proportional-plus-remainder scheme applies within the span.
    """
    if not (0 <= span_start < span_end <= CHARSET_SIZE**length):
        raise EmptyInput(f"span [{span_start}, {span_end}) invalid for length {length}")
    _check_powers(powers)

    total = span_end - span_start
    total_power = sum(Fraction(p) for p in powers.values())
    order = nodes_by_power_desc(powers)
    widths = {n: floor(Fraction(powers[n]) * total / total_power) for n in order}
    remainder = total - sum(widths.values())
    for i in range(remainder):
        widths[order[i % len(order)]] += 1

    ranges: dict[str, KeyspaceRange] = {}
    start = span_start
    for node_id in order:
        width = widths[node_id]
        if width == 0:
            continue
        ranges[node_id] = KeyspaceRange(start=start, end=start + width, length=length)
        start += width
    return ranges


# --------------------------------------------------------------------------
# Attack-duration estimators


@dataclass(frozen=True)
class BruteEstimate:
    length: int  # candidate password length


@dataclass(frozen=True)
class DictionaryEstimate:
    lines: int


@dataclass(frozen=True)
class RuleEstimate:
    lines: int
    rules: int


@dataclass(frozen=True)
class CombinatorEstimate:
    lines_left: int
    lines_right: int


EstimateSpec = BruteEstimate | DictionaryEstimate | RuleEstimate | CombinatorEstimate


def candidate_count(spec: EstimateSpec) -> int:
    """Exact number of candidates an attack will try (arbitrary precision)."""
    if isinstance(spec, BruteEstimate):
        if spec.length < 1:
            raise EmptyInput("brute-force length must be >= 1")
        return CHARSET_SIZE**spec.length
    if isinstance(spec, DictionaryEstimate):
        if spec.lines < 0:
            raise EmptyInput("line count must be >= 0")
        return spec.lines
    if isinstance(spec, RuleEstimate):
        if spec.lines < 0 or spec.rules < 0:
            raise EmptyInput("counts must be >= 0")
        return spec.lines * spec.rules
    if isinstance(spec, CombinatorEstimate):
        if spec.lines_left < 0 or spec.lines_right < 0:
            raise EmptyInput("counts must be >= 0")
        return spec.lines_left * spec.lines_right
    raise EmptyInput(f"unknown estimate spec {spec!r}")


def estimate_time(spec: EstimateSpec, hps: float) -> float:
    """Seconds to traverse the whole candidate space at `hps` hashes/second.

    The numerator is an exact integer; the single float division happens
    last, so lengths up to at least 32 never overflow intermediate math.
    """
    if not hps > 0:
        raise NonPositiveRate(f"hash rate must be positive, got {hps!r}")
    return candidate_count(spec) / hps
