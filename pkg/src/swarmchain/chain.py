"""Signed per-interval event lists linked into a tamper-evident history chain.

Every robot closes each interval t >= 1 with a link holding its event
list for t, a reference to its previous link, and a signature.  An event
entry witnesses one exchange: the peer's id, a digest identifying the
peer's head link from the previous interval, the signature field of that
link, and the peer's credential.  A robot with no links yet (first
interval, or first activity after an outage) witnesses meetings with a
signature over the distinguished genesis digest instead.

Instead of embedding full histories inside each other, links are stored
once in a content-addressed :class:`LinkStore` and referenced by digest.
The signature covers the same content either way, so verification power
is unchanged while memory stays linear in the number of links.

Byte layouts (normative)
------------------------
Canonical payload -- the signed content (``canonical_encode``)::

    magic     2   b"E1"
    interval  4   big-endian unsigned
    prev      32  digest of the owner's previous link (genesis: zeros)
    count     4   big-endian unsigned number of entries
    entries, ascending peer_id:
      peer_id      4   big-endian unsigned
      link_digest  32  digest of the peer's referenced link (or genesis)
      sig_len      2   big-endian unsigned, then the peer signature bytes
      cred_id      4   big-endian unsigned
      vk_len       2   big-endian unsigned, then the verify-key bytes
      cert_len     2   big-endian unsigned, then the certificate bytes

Full link encoding (``encode_link``)::

    magic     2   b"L1"
    owner     4   big-endian unsigned
    payload   --  the canonical payload above, verbatim
    sig_len   2   big-endian unsigned, then the owner signature bytes

The message a robot signs is ``digest(canonical_encode(...)).value``.  A
link's store address is ``digest(encode_link(link))``: owner id and
signature sit outside the signed payload, so links of different owners
get distinct addresses even when their payloads coincide (e.g. first
links with empty event lists), while the owner's signature still covers
every entry byte through the payload.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, Iterator

from .crypto import (
    DIGEST_SIZE,
    Credential,
    Digest,
    SigningIdentity,
    digest,
    sign,
    verify,
)

GENESIS = Digest(b"\x00" * DIGEST_SIZE)

_PAYLOAD_MAGIC = b"E1"
_LINK_MAGIC = b"L1"


class EncodingError(ValueError):
    """Raised when serialized chain bytes cannot be decoded."""


@dataclass(frozen=True)
class EventEntry:
    """One witnessed exchange inside an event list."""

    peer_id: int
    peer_link_digest: Digest
    peer_signature: bytes
    peer_credential: Credential


@dataclass(frozen=True)
class EventList:
    """The exchanges one robot witnessed during one interval.

    Entries are kept sorted by peer id; at most one entry per peer.
    """

    interval: int
    entries: tuple[EventEntry, ...]

    def __post_init__(self) -> None:
        if self.interval < 1:
            raise ValueError(f"interval must be >= 1, got {self.interval}")
        object.__setattr__(self, "entries", tuple(sorted(self.entries, key=lambda e: e.peer_id)))
        peers = [e.peer_id for e in self.entries]
        if len(set(peers)) != len(peers):
            raise ValueError("at most one entry per peer in an event list")

    @classmethod
    def empty(cls, interval: int) -> "EventList":
        return cls(interval=interval, entries=())

    def peer_ids(self) -> frozenset[int]:
        return frozenset(e.peer_id for e in self.entries)

    def entry_for(self, peer_id: int) -> EventEntry | None:
        for entry in self.entries:
            if entry.peer_id == peer_id:
                return entry
        return None


@dataclass(frozen=True)
class HistoryLink:
    """One link of a robot's signed history chain."""

    owner_id: int
    interval: int
    events: EventList
    prev_digest: Digest
    signature: bytes

    def __post_init__(self) -> None:
        if self.events.interval != self.interval:
            raise ValueError(
                f"event list interval {self.events.interval} != link interval {self.interval}"
            )
        if self.interval == 1 and self.prev_digest != GENESIS:
            raise ValueError("a link at interval 1 must reference the genesis digest")


def canonical_encode(events: EventList, t: int, prev: Digest) -> bytes:
    """Deterministic, injective encoding of the signed link payload.

    Field order is fixed, variable-length fields are length-prefixed,
    and entries appear sorted by ascending peer id, so logically equal
    inputs encode identically regardless of construction order.
    """
    if events.interval != t:
        raise ValueError(f"event list interval {events.interval} != {t}")
    parts = [_PAYLOAD_MAGIC, struct.pack(">I", t), prev.value, struct.pack(">I", len(events.entries))]
    for entry in events.entries:
        cred = entry.peer_credential
        parts.append(struct.pack(">I", entry.peer_id))
        parts.append(entry.peer_link_digest.value)
        parts.append(struct.pack(">H", len(entry.peer_signature)))
        parts.append(entry.peer_signature)
        parts.append(struct.pack(">I", cred.robot_id))
        parts.append(struct.pack(">H", len(cred.verify_key)))
        parts.append(cred.verify_key)
        parts.append(struct.pack(">H", len(cred.cert)))
        parts.append(cred.cert)
    return b"".join(parts)


def _payload_bytes(link: HistoryLink) -> bytes:
    cached = link.__dict__.get("_payload")
    if cached is None:
        cached = canonical_encode(link.events, link.interval, link.prev_digest)
        object.__setattr__(link, "_payload", cached)
    return cached


def signed_digest(link: HistoryLink) -> Digest:
    """The digest a link's owner signs: hash of the canonical payload."""
    cached = link.__dict__.get("_signed_digest")
    if cached is None:
        cached = digest(_payload_bytes(link))
        object.__setattr__(link, "_signed_digest", cached)
    return cached


def encode_link(link: HistoryLink) -> bytes:
    """Full serialized form of a link (owner, payload, signature)."""
    return b"".join(
        [
            _LINK_MAGIC,
            struct.pack(">I", link.owner_id),
            _payload_bytes(link),
            struct.pack(">H", len(link.signature)),
            link.signature,
        ]
    )


def link_digest(link: HistoryLink) -> Digest:
    """A link's content address: hash of its full serialized form."""
    cached = link.__dict__.get("_link_digest")
    if cached is None:
        cached = digest(encode_link(link))
        object.__setattr__(link, "_link_digest", cached)
    return cached


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def take(self, size: int, what: str) -> bytes:
        if self.pos + size > len(self.data):
            raise EncodingError(f"truncated while reading {what} at offset {self.pos}")
        out = self.data[self.pos : self.pos + size]
        self.pos += size
        return out

    def u32(self, what: str) -> int:
        return struct.unpack(">I", self.take(4, what))[0]

    def u16(self, what: str) -> int:
        return struct.unpack(">H", self.take(2, what))[0]


def _decode_payload(reader: _Reader) -> tuple[int, Digest, tuple[EventEntry, ...]]:
    if reader.take(2, "payload magic") != _PAYLOAD_MAGIC:
        raise EncodingError("bad payload magic")
    interval = reader.u32("interval")
    prev = Digest(reader.take(DIGEST_SIZE, "prev digest"))
    count = reader.u32("entry count")
    entries = []
    for i in range(count):
        peer_id = reader.u32(f"entry[{i}] peer id")
        peer_digest = Digest(reader.take(DIGEST_SIZE, f"entry[{i}] digest"))
        sig = reader.take(reader.u16(f"entry[{i}] sig length"), f"entry[{i}] signature")
        cred_id = reader.u32(f"entry[{i}] credential id")
        vk = reader.take(reader.u16(f"entry[{i}] key length"), f"entry[{i}] verify key")
        cert = reader.take(reader.u16(f"entry[{i}] cert length"), f"entry[{i}] certificate")
        entries.append(
            EventEntry(
                peer_id=peer_id,
                peer_link_digest=peer_digest,
                peer_signature=sig,
                peer_credential=Credential(robot_id=cred_id, verify_key=vk, cert=cert),
            )
        )
    return interval, prev, tuple(entries)


def decode_link(data: bytes) -> HistoryLink:
    """Inverse of :func:`encode_link`; raises :class:`EncodingError` on malformed bytes."""
    reader = _Reader(data)
    if reader.take(2, "link magic") != _LINK_MAGIC:
        raise EncodingError("bad link magic")
    owner = reader.u32("owner id")
    interval, prev, entries = _decode_payload(reader)
    signature = reader.take(reader.u16("sig length"), "signature")
    if reader.pos != len(data):
        raise EncodingError(f"{len(data) - reader.pos} trailing bytes after link")
    try:
        return HistoryLink(
            owner_id=owner,
            interval=interval,
            events=EventList(interval=interval, entries=entries),
            prev_digest=prev,
            signature=signature,
        )
    except ValueError as exc:
        raise EncodingError(str(exc)) from exc


class LinkStore:
    """Content-addressed link storage: digest(encode_link(link)) -> link."""

    def __init__(self) -> None:
        self._links: dict[Digest, HistoryLink] = {}
        self._closures: dict[Digest, frozenset[Digest]] = {}

    def insert(self, link: HistoryLink) -> Digest:
        d = link_digest(link)
        self._links[d] = link
        return d

    def get(self, d: Digest) -> HistoryLink | None:
        return self._links.get(d)

    def __contains__(self, d: Digest) -> bool:
        return d in self._links

    def __len__(self) -> int:
        return len(self._links)

    def digests(self) -> Iterator[Digest]:
        return iter(self._links)

    def links(self) -> Iterator[HistoryLink]:
        return iter(self._links.values())

    def closure(self, head: Digest) -> frozenset[Digest]:
        """All stored link digests reachable from ``head`` via previous-link
        and entry references.  Dangling references are simply absent from
        the result.  Cached per store; the cache assumes links are only
        ever added after everything they reference."""
        cached = self._closures.get(head)
        if cached is not None:
            return cached
        link = self._links.get(head)
        if link is None:
            return frozenset()
        out = {head}
        complete = True
        for ref in self._references(link):
            if ref == GENESIS:
                continue
            sub = self.closure(ref)
            if not sub:
                complete = False
            out.update(sub)
        result = frozenset(out)
        if complete:
            self._closures[head] = result
        return result

    @staticmethod
    def _references(link: HistoryLink) -> Iterator[Digest]:
        yield link.prev_digest
        for entry in link.events.entries:
            yield entry.peer_link_digest


@dataclass(frozen=True)
class HistoryOffer:
    """What one robot hands to another during an exchange: its credential
    and its head link from the previous interval, or a signature over the
    genesis digest when it has no links yet."""

    credential: Credential
    link: HistoryLink | None
    genesis_signature: bytes | None = None

    def __post_init__(self) -> None:
        if (self.link is None) == (self.genesis_signature is None):
            raise ValueError("an offer carries exactly one of link or genesis signature")


def offer_history(identity: SigningIdentity, head: HistoryLink | None) -> HistoryOffer:
    """Build the offer a robot presents when meeting a peer."""
    if head is None:
        return HistoryOffer(
            credential=identity.credential,
            link=None,
            genesis_signature=sign(identity, GENESIS.value),
        )
    return HistoryOffer(credential=identity.credential, link=head)


def _offer_verifies(owner_id: int, t: int, offer: HistoryOffer) -> bool:
    if offer.credential.robot_id == owner_id:
        return False
    if offer.link is None:
        return verify(offer.credential, GENESIS.value, offer.genesis_signature)
    link = offer.link
    return (
        link.owner_id == offer.credential.robot_id
        and link.interval == t - 1
        and verify(offer.credential, signed_digest(link).value, link.signature)
    )


def build_event_list(owner_id: int, t: int, offers: Iterable[HistoryOffer]) -> EventList:
    """Turn the interval's verified exchanges into an event list.

    Offers whose history is missing, stale, or fails signature checks
    are omitted rather than raised: a lying or broken peer costs itself
    the record, nothing more.  No exchanges means an empty list.
    """
    entries: dict[int, EventEntry] = {}
    for offer in offers:
        if not _offer_verifies(owner_id, t, offer):
            continue
        peer_id = offer.credential.robot_id
        if peer_id in entries:
            continue
        if offer.link is None:
            entries[peer_id] = EventEntry(
                peer_id=peer_id,
                peer_link_digest=GENESIS,
                peer_signature=offer.genesis_signature,
                peer_credential=offer.credential,
            )
        else:
            entries[peer_id] = EventEntry(
                peer_id=peer_id,
                peer_link_digest=link_digest(offer.link),
                peer_signature=offer.link.signature,
                peer_credential=offer.credential,
            )
    return EventList(interval=t, entries=tuple(entries.values()))


def extend_history(
    identity: SigningIdentity,
    prev: HistoryLink | None,
    events: EventList,
    store: LinkStore,
) -> HistoryLink:
    """Close an interval: sign a new link over (events, t, prev) and store it."""
    expected = 1 if prev is None else prev.interval + 1
    if events.interval != expected:
        raise ValueError(f"expected event list for interval {expected}, got {events.interval}")
    owner = identity.credential.robot_id
    if owner in events.peer_ids():
        raise ValueError("an event list cannot record its own owner")
    prev_digest = GENESIS if prev is None else link_digest(prev)
    payload_digest = digest(canonical_encode(events, events.interval, prev_digest))
    link = HistoryLink(
        owner_id=owner,
        interval=events.interval,
        events=events,
        prev_digest=prev_digest,
        signature=sign(identity, payload_digest.value),
    )
    store.insert(link)
    return link


@dataclass(frozen=True)
class ChainVerdict:
    """Outcome of :func:`verify_chain`: accept, or the first failure found."""

    ok: bool
    reason: str | None = None
    interval: int | None = None

    def __bool__(self) -> bool:
        return self.ok


ACCEPT = ChainVerdict(ok=True)


def _reject(reason: str, interval: int) -> ChainVerdict:
    return ChainVerdict(ok=False, reason=reason, interval=interval)


def _check_entry(entry: EventEntry, containing: HistoryLink, store: LinkStore, depth: int) -> ChainVerdict:
    t = containing.interval
    if entry.peer_id != entry.peer_credential.robot_id:
        return _reject("entry-credential-mismatch", t)
    if entry.peer_link_digest == GENESIS:
        if not verify(entry.peer_credential, GENESIS.value, entry.peer_signature):
            return _reject("bad-entry-signature", t)
        return ACCEPT
    resolved = store.get(entry.peer_link_digest)
    if resolved is None:
        # A head can be checked with no transitive content: its own
        # signature covers the entry digests as opaque bytes.  Anything
        # deeper demands the referenced links.
        if depth == 1:
            return ACCEPT
        return _reject("missing-entry-link", t)
    if link_digest(resolved) != entry.peer_link_digest:
        return _reject("entry-digest-mismatch", t)
    if resolved.owner_id != entry.peer_id:
        return _reject("entry-owner-mismatch", t)
    if resolved.interval != t - 1:
        return _reject("entry-interval-mismatch", t)
    if entry.peer_signature != resolved.signature or not verify(
        entry.peer_credential, signed_digest(resolved).value, entry.peer_signature
    ):
        return _reject("bad-entry-signature", t)
    return ACCEPT


def verify_chain(
    head: HistoryLink,
    owner_credential: Credential,
    store: LinkStore,
    depth: int,
) -> ChainVerdict:
    """Verify the ``depth`` most recent links of a chain.

    Each checked link must carry a valid owner signature, intervals must
    descend by exactly one, previous links must resolve in the store (or
    be genesis), and every event entry's peer signature must verify
    against the content it references.  Ancestry beyond ``depth`` is not
    examined.  Rejections report the first failing interval; failures
    while resolving a predecessor report the expected predecessor
    interval.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    link = head
    for step in range(depth):
        if link.owner_id != owner_credential.robot_id:
            return _reject("wrong-owner", link.interval)
        if not verify(owner_credential, signed_digest(link).value, link.signature):
            return _reject("bad-signature", link.interval)
        for entry in link.events.entries:
            verdict = _check_entry(entry, link, store, depth)
            if not verdict:
                return verdict
        if link.prev_digest == GENESIS or step + 1 == depth:
            break
        prev = store.get(link.prev_digest)
        if prev is None:
            return _reject("missing-link", link.interval - 1)
        if link_digest(prev) != link.prev_digest:
            return _reject("digest-mismatch", link.interval - 1)
        if prev.interval != link.interval - 1:
            return _reject("interval-gap", link.interval - 1)
        link = prev
    return ACCEPT


def accept_encounter(link_i: HistoryLink, link_j: HistoryLink) -> bool:
    """True iff both links record each other (a paired encounter).

    Both links must already verify individually and belong to the same
    interval.
    """
    if link_i.interval != link_j.interval:
        raise ValueError(
            f"links are from different intervals: {link_i.interval} vs {link_j.interval}"
        )
    return (
        link_i.events.entry_for(link_j.owner_id) is not None
        and link_j.events.entry_for(link_i.owner_id) is not None
    )
