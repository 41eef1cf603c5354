"""Tamper-evident encounter histories for robot swarms.

Robots record who they met in each time interval, witness every meeting
with the peer's signature, and link the per-interval records into a
signed hash chain.  A random-graph simulator drives the protocol with
honest and misbehaving robots, detectors flag robots that lie about or
hide their encounters, and closed-form plus Monte Carlo tools quantify
how quickly news of a robot spreads through the swarm.
"""

__version__ = "0.1.0"
