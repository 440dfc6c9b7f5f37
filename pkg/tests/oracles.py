"""Independent reference implementations used as test oracles.

These deliberately re-derive expected results by a different route than
the production code: literal line-by-line traces of the distribution
procedures, naive big-integer arithmetic, and brute-force enumeration.
Keep them boring.
"""

from __future__ import annotations

from fractions import Fraction
from math import floor


def trace_distribute_hashes(hashes, powers):
    """Literal trace of the proportional hash distribution procedure.

    Steps: total power; per-node target = max(1, floor(share * N));
    positive remainder round-robin over nodes sorted by power descending;
    negative remainder (over-allocation) decremented weakest-first; then
    contiguous slicing in descending power order. Ties order by node id.
    """
    total_power = sum(Fraction(p) for p in powers.values())
    n = len(hashes)
    target_counts = {}
    for node_id in powers:
        target_counts[node_id] = max(1, floor(Fraction(powers[node_id]) * n / total_power))
    allocated = sum(target_counts.values())
    remaining = n - allocated
    sorted_nodes = sorted(powers, key=lambda k: (-Fraction(powers[k]), k))
    if remaining >= 0:
        for i in range(remaining):
            target_counts[sorted_nodes[i % len(sorted_nodes)]] += 1
    else:
        excess = -remaining
        while excess > 0:
            for node_id in reversed(sorted_nodes):
                if excess == 0:
                    break
                if target_counts[node_id] > 0:
                    target_counts[node_id] -= 1
                    excess -= 1
    distribution = {}
    current_index = 0
    for node_id in sorted_nodes:
        count = target_counts[node_id]
        distribution[node_id] = list(hashes[current_index:current_index + count])
        current_index += count
    return distribution


def trace_distribute_dictionaries(list_sizes, powers):
    """Literal trace of the wordlist distribution procedure.

    list_sizes: mapping wordlist id -> line count (insertion order is the
    input order). Returns (assignment mapping, removed node list).
    """
    dicts = list(list_sizes)
    total_size = sum(list_sizes.values())
    sorted_nodes = sorted(powers, key=lambda k: (-Fraction(powers[k]), k))
    removed = []
    if len(dicts) < len(sorted_nodes):
        removed = sorted_nodes[len(dicts):]
        sorted_nodes = sorted_nodes[:len(dicts)]
    total_power = sum(Fraction(powers[n]) for n in sorted_nodes)
    distribution = {n: [] for n in sorted_nodes}
    target_sizes = {n: Fraction(powers[n]) * total_size / total_power for n in sorted_nodes}
    current = {n: 0 for n in sorted_nodes}
    assigned = set()

    lightest = min(dicts, key=lambda d: (list_sizes[d], d))
    weakest = sorted_nodes[-1]
    distribution[weakest].append(lightest)
    current[weakest] += list_sizes[lightest]
    assigned.add(lightest)

    for dict_name in sorted(dicts, key=lambda d: (-list_sizes[d], d)):
        if dict_name in assigned:
            continue
        for node_id in sorted_nodes:
            if current[node_id] + list_sizes[dict_name] <= target_sizes[node_id]:
                distribution[node_id].append(dict_name)
                current[node_id] += list_sizes[dict_name]
                assigned.add(dict_name)
                break

    for dict_name in dicts:
        if dict_name in assigned:
            continue
        best = None
        best_room = None
        for node_id in sorted_nodes:
            room = target_sizes[node_id] - current[node_id]
            if best_room is None or room > best_room:
                best, best_room = node_id, room
        distribution[best].append(dict_name)
        current[best] += list_sizes[dict_name]
        assigned.add(dict_name)
    return distribution, removed


def naive_index_to_candidate(length, index):
    """Schoolbook base-95 conversion (repeated division, then reverse)."""
    charset = [bytes([b]) for b in range(0x20, 0x7F)]
    digits = []
    for _ in range(length):
        digits.append(charset[index % 95])
        index //= 95
    assert index == 0
    return b"".join(reversed(digits))


def enumerate_keyspace(length):
    """Full candidate enumeration via nested iteration (small lengths only)."""
    charset = [bytes([b]) for b in range(0x20, 0x7F)]
    if length == 1:
        return list(charset)
    shorter = enumerate_keyspace(length - 1)
    return [prefix + c for prefix in shorter for c in charset]


def assert_ranges_tile(ranges, total):
    """Ranges (start, end) must cover [0, total) exactly, no gaps/overlaps."""
    spans = sorted(ranges)
    assert spans, "no ranges to check"
    assert spans[0][0] == 0, f"first range starts at {spans[0][0]}"
    for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
        assert e1 == s2, f"gap or overlap between {e1} and {s2}"
    assert spans[-1][1] == total, f"last range ends at {spans[-1][1]}, want {total}"
