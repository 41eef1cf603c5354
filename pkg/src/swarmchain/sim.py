"""Discrete-interval swarm simulation with configurable misbehavior.

Each interval samples an encounter graph, runs one exchange per meeting
pair, and closes with every active robot signing a new history link over
the exchanges it could verify.  Robots listed in adversary profiles
deviate in one of five ways:

* ``refuse_record``  -- hands its history over but records nobody.
* ``refuse_give``    -- withholds its history; peers have nothing to record.
* ``disappear``      -- absent between ``from_t`` and ``to_t``: no meetings,
                        no new links.
* ``collude``        -- the listed group exchanges genuine records with each
                        other every interval whether or not they met.
* ``forge_claim``    -- presents fabricated history in the target's name at
                        every meeting and plants an unwitnessed entry for
                        the target in its own chain.

A run is a pure function of its :class:`SimConfig`: identities derive
from the seed, interval graphs come from per-interval child streams of
the root seed, and exchanges execute in sorted order.  Traces therefore
serialize to byte-identical JSON for identical configs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

import numpy as np

from . import __version__
from .chain import (
    GENESIS,
    EventEntry,
    EventList,
    HistoryLink,
    HistoryOffer,
    LinkStore,
    build_event_list,
    canonical_encode,
    extend_history,
    link_digest,
    offer_history,
    verify_chain,
)
from .crypto import (
    Credential,
    Digest,
    SigningIdentity,
    digest,
    provision_swarm,
    sign,
    verify,
    verify_credential,
)
from .graph import EncounterGraph, gen_interval_graph

TRACE_FORMAT = "swarmchain-trace"
TRACE_VERSION = 1

BEHAVIOR_HONEST = "honest"
BEHAVIORS = ("refuse_record", "refuse_give", "disappear", "collude", "forge_claim")


class ConfigError(ValueError):
    """Invalid simulation configuration; names the offending field."""

    def __init__(self, config_field: str, message: str) -> None:
        super().__init__(f"field '{config_field}': {message}")
        self.field = config_field


class TraceError(ValueError):
    """Invalid or corrupt trace data; carries the location of the first failure."""

    def __init__(self, location: str, message: str) -> None:
        super().__init__(f"{location}: {message}")
        self.location = location


class DuplicateExchangeError(RuntimeError):
    """A pair can exchange history at most once per interval."""


@dataclass(frozen=True)
class AdversaryProfile:
    """Which robots misbehave and how."""

    behavior: str
    robots: frozenset[int]
    from_t: int | None = None
    to_t: int | None = None
    target: int | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"behavior": self.behavior, "robots": sorted(self.robots)}
        if self.from_t is not None:
            out["from_t"] = self.from_t
        if self.to_t is not None:
            out["to_t"] = self.to_t
        if self.target is not None:
            out["target"] = self.target
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], where: str = "adversaries") -> "AdversaryProfile":
        known = {"behavior", "robots", "from_t", "to_t", "target"}
        for key in data:
            if key not in known:
                raise ConfigError(f"{where}.{key}", "unknown field")
        behavior = data.get("behavior")
        if behavior not in BEHAVIORS:
            raise ConfigError(f"{where}.behavior", f"must be one of {BEHAVIORS}, got {behavior!r}")
        robots = data.get("robots")
        if not isinstance(robots, (list, tuple)) or not all(isinstance(r, int) for r in robots):
            raise ConfigError(f"{where}.robots", "must be a list of robot ids")
        return cls(
            behavior=behavior,
            robots=frozenset(robots),
            from_t=data.get("from_t"),
            to_t=data.get("to_t"),
            target=data.get("target"),
        )


@dataclass(frozen=True)
class SimConfig:
    """Everything that determines a run."""

    n: int
    p: float
    intervals: int
    delta: int = 3
    alpha: float = 0.0
    window: int | None = None
    seed: int | None = 0
    adversaries: tuple[AdversaryProfile, ...] = ()

    def __post_init__(self) -> None:
        self.validate()

    @property
    def resolved_window(self) -> int:
        return self.delta if self.window is None else self.window

    def validate(self) -> None:
        if not isinstance(self.n, int) or self.n < 1:
            raise ConfigError("n", f"robot count must be an integer >= 1, got {self.n!r}")
        if not isinstance(self.p, (int, float)) or not 0.0 <= self.p <= 1.0:
            raise ConfigError("p", f"edge probability must be in [0, 1], got {self.p!r}")
        if not isinstance(self.intervals, int) or self.intervals < 1:
            raise ConfigError("intervals", f"must be an integer >= 1, got {self.intervals!r}")
        if not isinstance(self.delta, int) or not 1 <= self.delta <= self.intervals:
            raise ConfigError(
                "delta", f"must be an integer in 1..intervals={self.intervals}, got {self.delta!r}"
            )
        if not isinstance(self.alpha, (int, float)) or not 0.0 <= self.alpha < 1.0:
            raise ConfigError("alpha", f"assumed bad fraction must be in [0, 1), got {self.alpha!r}")
        if self.window is not None and (not isinstance(self.window, int) or self.window < 1):
            raise ConfigError("window", f"must be an integer >= 1 or null, got {self.window!r}")
        if self.seed is not None and not isinstance(self.seed, int):
            raise ConfigError("seed", f"must be an integer or null, got {self.seed!r}")
        self._validate_adversaries()

    def _validate_adversaries(self) -> None:
        seen: set[int] = set()
        for idx, profile in enumerate(self.adversaries):
            where = f"adversaries[{idx}]"
            if profile.behavior not in BEHAVIORS:
                raise ConfigError(f"{where}.behavior", f"unknown behavior {profile.behavior!r}")
            if not profile.robots:
                raise ConfigError(f"{where}.robots", "profile lists no robots")
            for r in profile.robots:
                if not 1 <= r <= self.n:
                    raise ConfigError(f"{where}.robots", f"robot id {r} out of range 1..{self.n}")
                if r in seen:
                    raise ConfigError(f"{where}.robots", f"robot {r} appears in two profiles")
                seen.add(r)
            if profile.behavior == "disappear":
                if profile.from_t is None or profile.to_t is None:
                    raise ConfigError(f"{where}.from_t", "disappear needs from_t and to_t")
                if not 1 <= profile.from_t <= profile.to_t <= self.intervals:
                    raise ConfigError(
                        f"{where}.from_t",
                        f"need 1 <= from_t <= to_t <= intervals={self.intervals}, "
                        f"got {profile.from_t}..{profile.to_t}",
                    )
            elif profile.from_t is not None or profile.to_t is not None:
                raise ConfigError(f"{where}.from_t", f"{profile.behavior} takes no interval window")
            if profile.behavior == "collude" and len(profile.robots) < 2:
                raise ConfigError(f"{where}.robots", "collusion needs at least two robots")
            if profile.behavior == "forge_claim":
                if profile.target is None or not 1 <= profile.target <= self.n:
                    raise ConfigError(f"{where}.target", f"need a target id in 1..{self.n}")
                if profile.target in profile.robots:
                    raise ConfigError(f"{where}.target", "target cannot be one of the forgers")
            elif profile.target is not None:
                raise ConfigError(f"{where}.target", f"{profile.behavior} takes no target")
        if seen and len(seen) / self.n > self.alpha:
            raise ConfigError(
                "alpha",
                f"{len(seen)}/{self.n} robots misbehave but alpha={self.alpha}; "
                "alpha must be at least the misbehaving fraction",
            )

    def adversary_ids(self) -> frozenset[int]:
        out: set[int] = set()
        for profile in self.adversaries:
            out |= profile.robots
        return frozenset(out)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "p": self.p,
            "intervals": self.intervals,
            "delta": self.delta,
            "alpha": self.alpha,
            "window": self.window,
            "seed": self.seed,
            "adversaries": [a.to_dict() for a in self.adversaries],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SimConfig":
        if not isinstance(data, Mapping):
            raise ConfigError("config", f"must be an object, got {type(data).__name__}")
        known = {"n", "p", "intervals", "delta", "alpha", "window", "seed", "adversaries"}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown field")
        for required in ("n", "p", "intervals"):
            if required not in data:
                raise ConfigError(required, "required field is missing")
        raw_adversaries = data.get("adversaries", [])
        if not isinstance(raw_adversaries, list):
            raise ConfigError("adversaries", "must be a list of profiles")
        profiles = tuple(
            AdversaryProfile.from_dict(entry, where=f"adversaries[{i}]")
            for i, entry in enumerate(raw_adversaries)
        )
        return cls(
            n=data["n"],
            p=data["p"],
            intervals=data["intervals"],
            delta=data.get("delta", 3),
            alpha=data.get("alpha", 0.0),
            window=data.get("window"),
            seed=data.get("seed", None),
            adversaries=profiles,
        )


@dataclass(frozen=True)
class ExchangeRecord:
    """Outcome of one meeting, from both sides; a < b."""

    interval: int
    a: int
    b: int
    a_gave: bool
    b_gave: bool
    a_recorded: bool
    b_recorded: bool
    fabricated: bool = False
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "interval": self.interval,
            "a": self.a,
            "b": self.b,
            "a_gave": self.a_gave,
            "b_gave": self.b_gave,
            "a_recorded": self.a_recorded,
            "b_recorded": self.b_recorded,
            "fabricated": self.fabricated,
            "notes": list(self.notes),
        }


def apply_disappearance(profiles: Iterable[AdversaryProfile], t: int, n: int) -> frozenset[int]:
    """Robot ids active during interval ``t``: everyone outside a disappearance window."""
    absent: set[int] = set()
    for profile in profiles:
        if profile.behavior == "disappear" and profile.from_t <= t <= profile.to_t:
            absent |= profile.robots
    return frozenset(r for r in range(1, n + 1) if r not in absent)


@dataclass
class SimTrace:
    """Everything a run produced; a pure function of its config."""

    config: SimConfig
    central_verify_key: bytes
    credentials: dict[int, Credential]
    graphs: tuple[EncounterGraph, ...]
    heads: dict[int, Digest | None]
    store: LinkStore
    exchanges: tuple[ExchangeRecord, ...]

    def head_link(self, robot_id: int) -> HistoryLink | None:
        d = self.heads.get(robot_id)
        return None if d is None else self.store.get(d)

    def head_links(self) -> dict[int, HistoryLink | None]:
        return {r: self.head_link(r) for r in range(1, self.config.n + 1)}

    def to_dict(self, manifest: Mapping[str, Any] | None = None) -> dict[str, Any]:
        links = sorted(
            self.store.links(), key=lambda l: (l.owner_id, l.interval, link_digest(l).hex())
        )
        return {
            "format": TRACE_FORMAT,
            "version": TRACE_VERSION,
            "manifest": dict(manifest) if manifest else None,
            "config": self.config.to_dict(),
            "central_verify_key": self.central_verify_key.hex(),
            "credentials": [
                {
                    "robot_id": c.robot_id,
                    "verify_key": c.verify_key.hex(),
                    "cert": c.cert.hex(),
                }
                for _, c in sorted(self.credentials.items())
            ],
            "graphs": [
                {"interval": g.interval, "n": g.n, "edges": [list(e) for e in sorted(g.edges)]}
                for g in self.graphs
            ],
            "links": [_link_to_dict(link) for link in links],
            "heads": {
                str(r): (d.hex() if d is not None else None) for r, d in sorted(self.heads.items())
            },
            "exchanges": [x.to_dict() for x in self.exchanges],
        }

    def to_json(self, manifest: Mapping[str, Any] | None = None) -> str:
        return json.dumps(self.to_dict(manifest), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SimTrace":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise TraceError(f"offset {exc.pos}", f"not valid JSON: {exc.msg}") from exc
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SimTrace":
        if not isinstance(data, Mapping):
            raise TraceError("document", "trace must be a JSON object")
        if data.get("format") != TRACE_FORMAT:
            raise TraceError("format", f"expected {TRACE_FORMAT!r}, got {data.get('format')!r}")
        if data.get("version") != TRACE_VERSION:
            raise TraceError("version", f"unsupported version {data.get('version')!r}")
        try:
            config = SimConfig.from_dict(data["config"])
        except KeyError:
            raise TraceError("config", "missing") from None
        except ConfigError as exc:
            raise TraceError(f"config.{exc.field}", str(exc)) from exc

        central = _hex_field(data, "central_verify_key")
        credentials: dict[int, Credential] = {}
        for i, entry in enumerate(_list_field(data, "credentials")):
            where = f"credentials[{i}]"
            try:
                credentials[entry["robot_id"]] = Credential(
                    robot_id=entry["robot_id"],
                    verify_key=bytes.fromhex(entry["verify_key"]),
                    cert=bytes.fromhex(entry["cert"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise TraceError(where, f"bad credential: {exc}") from exc
        for r in range(1, config.n + 1):
            if r not in credentials:
                raise TraceError("credentials", f"missing credential for robot {r}")

        graphs = []
        for i, entry in enumerate(_list_field(data, "graphs")):
            where = f"graphs[{i}]"
            try:
                graphs.append(
                    EncounterGraph(
                        n=entry["n"],
                        interval=entry["interval"],
                        edges=frozenset((u, v) for u, v in entry["edges"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise TraceError(where, f"bad graph: {exc}") from exc

        store = LinkStore()
        for i, entry in enumerate(_list_field(data, "links")):
            store.insert(_link_from_dict(entry, where=f"links[{i}]"))

        heads: dict[int, Digest | None] = {}
        raw_heads = data.get("heads")
        if not isinstance(raw_heads, Mapping):
            raise TraceError("heads", "must be an object")
        for key, value in raw_heads.items():
            where = f"heads.{key}"
            try:
                robot = int(key)
            except ValueError:
                raise TraceError(where, "robot id must be an integer") from None
            if value is None:
                heads[robot] = None
                continue
            try:
                d = Digest.from_hex(value)
            except ValueError as exc:
                raise TraceError(where, f"bad digest: {exc}") from exc
            if d not in store:
                raise TraceError(where, "head digest does not resolve to a stored link")
            heads[robot] = d

        exchanges = []
        for i, entry in enumerate(_list_field(data, "exchanges")):
            where = f"exchanges[{i}]"
            try:
                exchanges.append(
                    ExchangeRecord(
                        interval=entry["interval"],
                        a=entry["a"],
                        b=entry["b"],
                        a_gave=entry["a_gave"],
                        b_gave=entry["b_gave"],
                        a_recorded=entry["a_recorded"],
                        b_recorded=entry["b_recorded"],
                        fabricated=entry.get("fabricated", False),
                        notes=tuple(entry.get("notes", ())),
                    )
                )
            except (KeyError, TypeError) as exc:
                raise TraceError(where, f"bad exchange record: {exc}") from exc

        return cls(
            config=config,
            central_verify_key=central,
            credentials=credentials,
            graphs=tuple(graphs),
            heads=heads,
            store=store,
            exchanges=tuple(exchanges),
        )


def _hex_field(data: Mapping[str, Any], key: str) -> bytes:
    value = data.get(key)
    if not isinstance(value, str):
        raise TraceError(key, "must be a hex string")
    try:
        return bytes.fromhex(value)
    except ValueError as exc:
        raise TraceError(key, f"bad hex: {exc}") from exc


def _list_field(data: Mapping[str, Any], key: str) -> list:
    value = data.get(key)
    if not isinstance(value, list):
        raise TraceError(key, "must be a list")
    return value


def _link_to_dict(link: HistoryLink) -> dict[str, Any]:
    return {
        "owner": link.owner_id,
        "interval": link.interval,
        "prev": link.prev_digest.hex(),
        "signature": link.signature.hex(),
        "entries": [
            {
                "peer": e.peer_id,
                "digest": e.peer_link_digest.hex(),
                "signature": e.peer_signature.hex(),
                "credential": {
                    "robot_id": e.peer_credential.robot_id,
                    "verify_key": e.peer_credential.verify_key.hex(),
                    "cert": e.peer_credential.cert.hex(),
                },
            }
            for e in link.events.entries
        ],
    }


def _link_from_dict(data: Mapping[str, Any], where: str) -> HistoryLink:
    try:
        entries = []
        for j, e in enumerate(data["entries"]):
            cred = e["credential"]
            entries.append(
                EventEntry(
                    peer_id=e["peer"],
                    peer_link_digest=Digest.from_hex(e["digest"]),
                    peer_signature=bytes.fromhex(e["signature"]),
                    peer_credential=Credential(
                        robot_id=cred["robot_id"],
                        verify_key=bytes.fromhex(cred["verify_key"]),
                        cert=bytes.fromhex(cred["cert"]),
                    ),
                )
            )
        interval = data["interval"]
        return HistoryLink(
            owner_id=data["owner"],
            interval=interval,
            events=EventList(interval=interval, entries=tuple(entries)),
            prev_digest=Digest.from_hex(data["prev"]),
            signature=bytes.fromhex(data["signature"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise TraceError(where, f"bad link: {exc}") from exc


class Simulation:
    """Single-run engine; use :func:`run_simulation` unless a test needs
    exchange-level control."""

    def __init__(self, config: SimConfig) -> None:
        config.validate()
        if config.seed is None:
            raise ConfigError("seed", "a concrete seed is required to run a simulation")
        self.config = config
        central_vk, identities = provision_swarm(config.n, config.seed)
        self.central_verify_key = central_vk
        self.identities: dict[int, SigningIdentity] = {i.robot_id: i for i in identities}
        self.credentials: dict[int, Credential] = {
            i.robot_id: i.credential for i in identities
        }
        self.store = LinkStore()
        self.heads: dict[int, HistoryLink | None] = {r: None for r in range(1, config.n + 1)}
        self.behavior: dict[int, str] = {r: BEHAVIOR_HONEST for r in range(1, config.n + 1)}
        self.colluder_pairs: set[tuple[int, int]] = set()
        self.forge_target: dict[int, int] = {}
        for profile in config.adversaries:
            for r in profile.robots:
                self.behavior[r] = profile.behavior
            if profile.behavior == "collude":
                members = sorted(profile.robots)
                for i, a in enumerate(members):
                    for b in members[i + 1 :]:
                        self.colluder_pairs.add((a, b))
            if profile.behavior == "forge_claim":
                for r in profile.robots:
                    self.forge_target[r] = profile.target
        self.graphs: list[EncounterGraph] = []
        self.exchanges: list[ExchangeRecord] = []
        self._graph_streams = np.random.SeedSequence(config.seed).spawn(config.intervals)
        self._queues: dict[int, list[HistoryOffer]] = {}
        self._pairs_this_interval: set[tuple[int, int]] = set()
        self._current_edges: frozenset[tuple[int, int]] = frozenset()
        self._chain_ok: dict[tuple[Digest, int], bool] = {}
        self._offer_cache: dict[int, HistoryOffer] = {}

    def _offer_of(self, giver: int) -> HistoryOffer:
        offer = self._offer_cache.get(giver)
        if offer is None:
            offer = offer_history(self.identities[giver], self.heads[giver])
            self._offer_cache[giver] = offer
        return offer

    # -- exchange-time verification -------------------------------------

    def _offer_acceptable(self, offer: HistoryOffer, t: int) -> bool:
        if not verify_credential(offer.credential, self.central_verify_key):
            return False
        if offer.link is None:
            return verify(offer.credential, GENESIS.value, offer.genesis_signature)
        link = offer.link
        if link.owner_id != offer.credential.robot_id or link.interval != t - 1:
            return False
        depth = min(self.config.resolved_window, link.interval)
        key = (link_digest(link), depth)
        cached = self._chain_ok.get(key)
        if cached is None:
            cached = bool(verify_chain(link, offer.credential, self.store, depth))
            self._chain_ok[key] = cached
        return cached

    def _forged_offer(self, forger: int, t: int) -> HistoryOffer:
        """Fabricated history presented in the target's name.

        The forger cannot produce the target's signature, so it signs
        with its own key; verification under the target's credential
        must fail.
        """
        target_cred = self.credentials[self.forge_target[forger]]
        if t == 1:
            return HistoryOffer(
                credential=target_cred,
                link=None,
                genesis_signature=sign(self.identities[forger], GENESIS.value),
            )
        events = EventList.empty(t - 1)
        payload = digest(canonical_encode(events, t - 1, GENESIS))
        forged = HistoryLink(
            owner_id=target_cred.robot_id,
            interval=t - 1,
            events=events,
            prev_digest=GENESIS,
            signature=sign(self.identities[forger], payload.value),
        )
        self.store.insert(forged)
        return HistoryOffer(credential=target_cred, link=forged)

    def _forged_entry(self, forger: int, t: int) -> EventEntry:
        """The unwitnessed entry a forger plants in its own event list."""
        offer = self._forged_offer(forger, t)
        if offer.link is None:
            return EventEntry(
                peer_id=offer.credential.robot_id,
                peer_link_digest=GENESIS,
                peer_signature=offer.genesis_signature,
                peer_credential=offer.credential,
            )
        return EventEntry(
            peer_id=offer.credential.robot_id,
            peer_link_digest=link_digest(offer.link),
            peer_signature=offer.link.signature,
            peer_credential=offer.credential,
        )

    # -- protocol steps ---------------------------------------------------

    def exchange(self, i: int, j: int, t: int, fabricated: bool = False) -> ExchangeRecord:
        """Run the one allowed exchange between ``i`` and ``j`` for interval ``t``."""
        if i == j:
            raise ValueError("a robot cannot exchange history with itself")
        a, b = min(i, j), max(i, j)
        if (a, b) in self._pairs_this_interval:
            raise DuplicateExchangeError(f"pair ({a}, {b}) already exchanged in interval {t}")
        self._pairs_this_interval.add((a, b))

        notes: list[str] = []
        gave: dict[int, bool] = {}
        recorded: dict[int, bool] = {}
        for giver, receiver in ((a, b), (b, a)):
            gave[giver] = self.behavior[giver] != "refuse_give"
            recorded[receiver] = False
            if not gave[giver]:
                notes.append(f"withheld:{giver}->{receiver}")
                continue
            offer = self._offer_of(giver)
            if self.behavior[receiver] == "refuse_record":
                notes.append(f"unrecorded:{giver}->{receiver}")
                continue
            if self._offer_acceptable(offer, t):
                self._queues[receiver].append(offer)
                recorded[receiver] = True
            else:
                notes.append(f"invalid-offer:{giver}->{receiver}")
        for forger, victim in ((a, b), (b, a)):
            if self.behavior[forger] == "forge_claim":
                forged = self._forged_offer(forger, t)
                # The victim still sees the forged offer; omission happens
                # when it builds its event list.
                self._queues[victim].append(forged)
                if not self._offer_acceptable(forged, t):
                    notes.append(f"forged-offer-rejected:{forger}->{victim}")

        record = ExchangeRecord(
            interval=t,
            a=a,
            b=b,
            a_gave=gave[a],
            b_gave=gave[b],
            a_recorded=recorded[a],
            b_recorded=recorded[b],
            fabricated=fabricated,
            notes=tuple(notes),
        )
        self.exchanges.append(record)
        return record

    def _close_interval(self, r: int, t: int) -> None:
        events = build_event_list(r, t, self._queues[r])
        if self.behavior[r] == "forge_claim":
            entry = self._forged_entry(r, t)
            if entry.peer_id not in events.peer_ids():
                events = EventList(interval=t, entries=events.entries + (entry,))
        prev = self.heads[r]
        if prev is not None and prev.interval != t - 1:
            # Returning from an outage: link over the gap.  The jump in
            # interval numbers stays visible to verifiers and the audit.
            self.heads[r] = self._extend_over_gap(r, prev, events)
        else:
            self.heads[r] = extend_history(self.identities[r], prev, events, self.store)

    def _extend_over_gap(self, r: int, prev: HistoryLink, events: EventList) -> HistoryLink:
        prev_digest = link_digest(prev)
        payload = digest(canonical_encode(events, events.interval, prev_digest))
        link = HistoryLink(
            owner_id=r,
            interval=events.interval,
            events=events,
            prev_digest=prev_digest,
            signature=sign(self.identities[r], payload.value),
        )
        self.store.insert(link)
        return link

    def run(self) -> SimTrace:
        cfg = self.config
        for t in range(1, cfg.intervals + 1):
            active = apply_disappearance(cfg.adversaries, t, cfg.n)
            rng = np.random.default_rng(self._graph_streams[t - 1])
            g = gen_interval_graph(cfg.n, cfg.p, rng, interval=t)
            self.graphs.append(g)
            self._queues = {r: [] for r in range(1, cfg.n + 1)}
            self._pairs_this_interval = set()
            self._offer_cache = {}
            effective = {e for e in g.edges if e[0] in active and e[1] in active}
            forced = {
                pair
                for pair in self.colluder_pairs
                if pair[0] in active and pair[1] in active
            }
            self._current_edges = frozenset(effective)
            for a, b in sorted(effective | forced):
                self.exchange(a, b, t, fabricated=(a, b) not in effective)
            for r in sorted(active):
                self._close_interval(r, t)
        return SimTrace(
            config=cfg,
            central_verify_key=self.central_verify_key,
            credentials=dict(self.credentials),
            graphs=tuple(self.graphs),
            heads={r: (None if h is None else link_digest(h)) for r, h in self.heads.items()},
            store=self.store,
            exchanges=tuple(self.exchanges),
        )


def run_simulation(config: SimConfig) -> SimTrace:
    """Run one deterministic simulation of ``config``."""
    return Simulation(config).run()


def run_manifest(
    config: SimConfig,
    config_path: str | None = None,
    output_path: str | None = None,
) -> dict[str, Any]:
    """Reproducibility stamp embedded in every emitted artifact."""
    return {
        "tool": "swarmchain",
        "tool_version": __version__,
        "seed": config.seed,
        "config_path": config_path,
        "output_path": output_path,
        "config": config.to_dict(),
    }
