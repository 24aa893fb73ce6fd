"""listlab: a simulation lab for allow/deny list objects.

Deterministic cooperative scheduling, wait-free snapshot construction,
allow-list and deny-list objects, an exact linearizability checker,
consensus reductions, and two applications built on the lists (anonymous
token transfer, blind-signature voting), all drivable from batch campaign
configs through a small HTTP service or its CLI client.
"""

__version__ = "0.1.0"
