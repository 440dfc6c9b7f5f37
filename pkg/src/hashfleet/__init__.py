"""hashfleet: distributed password-analysis orchestration.

A coordinator service splits hash lists, wordlists and brute-force
keyspaces across registered compute agents proportionally to their
measured hashing power, aggregates recovered plaintexts in real time,
and exposes the whole thing over HTTP/websocket plus a CLI.
"""

__version__ = "0.1.0"
