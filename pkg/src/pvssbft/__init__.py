"""PVSS-backed BFT consensus for sleepy networks.

Library layout:

- ``group``     prime-order group arithmetic (safe-prime profiles)
- ``pvss``      publicly verifiable secret sharing (deal/verify/reconstruct)
- ``vrf``       verifiable random function for leader election
- ``protocol``  four-phase consensus node state machine
- ``simnet``    deterministic discrete-event network simulator + adversaries
- ``baselines`` PVSS-less BFT and longest-chain comparison protocols
- ``analysis``  closed-form churn analytics with Monte-Carlo oracles
- ``metrics``   per-view records, fork detection, CSV/JSON export
- ``config``    TOML scenario configs with strict key validation
- ``cli``       run / bench-pvss / analyze-churn / compare subcommands
"""

__version__ = "0.1.0"
