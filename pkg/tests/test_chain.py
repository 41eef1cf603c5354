import random
import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmchain.chain import (
    GENESIS,
    EncodingError,
    EventEntry,
    EventList,
    HistoryLink,
    HistoryOffer,
    LinkStore,
    accept_encounter,
    build_event_list,
    canonical_encode,
    decode_link,
    encode_link,
    extend_history,
    link_digest,
    offer_history,
    signed_digest,
    verify_chain,
)
from swarmchain.crypto import Digest, provision_swarm, sign


def _entry_for(identity, head):
    """Entry witnessing `identity` with its current head (or genesis)."""
    offer = offer_history(identity, head)
    if offer.link is None:
        return EventEntry(
            peer_id=identity.robot_id,
            peer_link_digest=GENESIS,
            peer_signature=offer.genesis_signature,
            peer_credential=identity.credential,
        )
    return EventEntry(
        peer_id=identity.robot_id,
        peer_link_digest=link_digest(offer.link),
        peer_signature=offer.link.signature,
        peer_credential=identity.credential,
    )


def _grow_pairwise(identities, store, intervals):
    """All robots meet everyone each interval; returns heads by robot id."""
    heads = {i.robot_id: None for i in identities}
    for t in range(1, intervals + 1):
        offers = {i.robot_id: offer_history(i, heads[i.robot_id]) for i in identities}
        new_heads = {}
        for me in identities:
            peer_offers = [offers[other.robot_id] for other in identities if other is not me]
            events = build_event_list(me.robot_id, t, peer_offers)
            new_heads[me.robot_id] = extend_history(me, heads[me.robot_id], events, store)
        heads = new_heads
    return heads


# -- canonical encoding -----------------------------------------------------


def test_canonical_encode_is_order_independent(swarm5):
    _, identities = swarm5
    e1 = _entry_for(identities[1], None)
    e2 = _entry_for(identities[2], None)
    a = EventList(interval=1, entries=(e1, e2))
    b = EventList(interval=1, entries=(e2, e1))
    assert canonical_encode(a, 1, GENESIS) == canonical_encode(b, 1, GENESIS)


def test_genesis_empty_payload_bytes_are_pinned():
    payload = canonical_encode(EventList.empty(1), 1, GENESIS)
    assert payload == b"E1" + struct.pack(">I", 1) + b"\x00" * 32 + struct.pack(">I", 0)


def test_encode_interval_mismatch_rejected():
    with pytest.raises(ValueError):
        canonical_encode(EventList.empty(2), 3, GENESIS)


def test_canonical_encode_injective_over_random_corpus(swarm5):
    _, identities = swarm5
    rng = random.Random(2718)
    base_entries = [_entry_for(i, None) for i in identities]
    seen = {}
    for _ in range(100_000):
        t = rng.randint(1, 500)
        prev = Digest(rng.randbytes(32))
        chosen = tuple(rng.sample(base_entries, rng.randint(0, len(base_entries))))
        events = EventList(interval=t, entries=chosen)
        key = (t, prev.value, frozenset(e.peer_id for e in chosen))
        blob = canonical_encode(events, t, prev)
        if blob in seen:
            assert seen[blob] == key
        else:
            seen[blob] = key


def test_peer_id_difference_changes_bytes(swarm5):
    _, identities = swarm5
    e1 = _entry_for(identities[1], None)
    e2 = EventEntry(
        peer_id=identities[3].robot_id,
        peer_link_digest=e1.peer_link_digest,
        peer_signature=e1.peer_signature,
        peer_credential=identities[3].credential,
    )
    a = canonical_encode(EventList(interval=1, entries=(e1,)), 1, GENESIS)
    b = canonical_encode(EventList(interval=1, entries=(e2,)), 1, GENESIS)
    assert a != b


def test_link_encoding_roundtrip(swarm5):
    _, identities = swarm5
    store = LinkStore()
    heads = _grow_pairwise(identities, store, 3)
    for head in heads.values():
        decoded = decode_link(encode_link(head))
        assert decoded == head
        assert link_digest(decoded) == link_digest(head)


def test_decode_rejects_truncations(swarm5):
    _, identities = swarm5
    store = LinkStore()
    heads = _grow_pairwise(identities, store, 2)
    blob = encode_link(heads[1])
    for cut in range(len(blob)):
        with pytest.raises(EncodingError):
            decode_link(blob[:cut])


def test_decode_rejects_trailing_bytes(swarm5):
    _, identities = swarm5
    store = LinkStore()
    link = extend_history(identities[0], None, EventList.empty(1), store)
    with pytest.raises(EncodingError):
        decode_link(encode_link(link) + b"\x00")


# -- event list construction -------------------------------------------------


def test_no_exchanges_gives_empty_list():
    events = build_event_list(1, 4, [])
    assert events.interval == 4
    assert events.entries == ()


def test_tampered_peer_link_is_omitted(swarm5):
    _, identities = swarm5
    store = LinkStore()
    heads = {}
    for identity in identities[1:4]:
        heads[identity.robot_id] = extend_history(identity, None, EventList.empty(1), store)
    offers = [offer_history(i, heads[i.robot_id]) for i in identities[1:4]]
    tampered = offers[0].link
    bad = HistoryLink(
        owner_id=tampered.owner_id,
        interval=tampered.interval,
        events=tampered.events,
        prev_digest=tampered.prev_digest,
        signature=bytes([tampered.signature[0] ^ 1]) + tampered.signature[1:],
    )
    offers[0] = HistoryOffer(credential=offers[0].credential, link=bad)
    events = build_event_list(identities[0].robot_id, 2, offers)
    assert events.peer_ids() == {identities[2].robot_id, identities[3].robot_id}


def test_stale_peer_link_is_omitted(swarm5):
    _, identities = swarm5
    store = LinkStore()
    head1 = extend_history(identities[1], None, EventList.empty(1), store)
    events = build_event_list(identities[0].robot_id, 3, [offer_history(identities[1], head1)])
    assert events.entries == ()  # interval 1 head cannot witness an interval-3 meeting


def test_wrong_key_signature_is_omitted(swarm5):
    """A claim naming an honest robot needs that robot's signature."""
    _, identities = swarm5
    victim, forger = identities[0], identities[1]
    forged = HistoryOffer(
        credential=victim.credential,
        link=None,
        genesis_signature=sign(forger, GENESIS.value),
    )
    events = build_event_list(identities[2].robot_id, 1, [forged])
    assert events.entries == ()


def test_self_offer_is_omitted(swarm5):
    _, identities = swarm5
    events = build_event_list(identities[0].robot_id, 1, [offer_history(identities[0], None)])
    assert events.entries == ()


def test_duplicate_offers_collapse_to_one_entry(swarm5):
    _, identities = swarm5
    offer = offer_history(identities[1], None)
    events = build_event_list(identities[0].robot_id, 1, [offer, offer])
    assert len(events.entries) == 1


def test_event_list_rejects_duplicate_peers(swarm5):
    _, identities = swarm5
    entry = _entry_for(identities[1], None)
    with pytest.raises(ValueError):
        EventList(interval=1, entries=(entry, entry))


# -- extension and verification ----------------------------------------------


def test_genesis_extension_verifies(swarm5):
    _, identities = swarm5
    store = LinkStore()
    link = extend_history(identities[0], None, EventList.empty(1), store)
    assert link.prev_digest == GENESIS
    assert verify_chain(link, identities[0].credential, store, depth=1)


def test_three_link_chain_replays(swarm5):
    _, identities = swarm5
    store = LinkStore()
    heads = _grow_pairwise(identities, store, 3)
    for identity in identities:
        verdict = verify_chain(heads[identity.robot_id], identity.credential, store, depth=3)
        assert verdict, verdict


def test_extension_interval_mismatch_raises(swarm5):
    _, identities = swarm5
    store = LinkStore()
    link = extend_history(identities[0], None, EventList.empty(1), store)
    with pytest.raises(ValueError):
        extend_history(identities[0], link, EventList.empty(1), store)
    with pytest.raises(ValueError):
        extend_history(identities[0], link, EventList.empty(3), store)


def test_extension_rejects_self_entry(swarm5):
    _, identities = swarm5
    store = LinkStore()
    events = EventList(interval=1, entries=(_entry_for(identities[0], None),))
    with pytest.raises(ValueError):
        extend_history(identities[0], None, events, store)


def test_tampered_middle_interval_rejected_at_that_interval(swarm5):
    _, identities = swarm5
    store = LinkStore()
    heads = _grow_pairwise(identities, store, 5)
    owner = identities[0]
    # locate the interval-3 link and flip one byte of its event payload
    link = heads[owner.robot_id]
    while link.interval != 3:
        link = store.get(link.prev_digest)
    blob = bytearray(encode_link(link))
    blob[10] ^= 0x01  # inside the canonical payload
    mutated = decode_link(bytes(blob))
    store._links[link_digest(link)] = mutated
    verdict = verify_chain(heads[owner.robot_id], owner.credential, store, depth=5)
    assert not verdict
    assert verdict.interval == 3


def test_depth_one_accepts_regardless_of_ancestry(swarm5):
    _, identities = swarm5
    store = LinkStore()
    heads = _grow_pairwise(identities, store, 3)
    empty = LinkStore()
    verdict = verify_chain(heads[1], identities[0].credential, empty, depth=1)
    assert verdict, verdict


def test_missing_predecessor_rejected(swarm5):
    _, identities = swarm5
    store = LinkStore()
    heads = _grow_pairwise(identities, store, 3)
    pruned = LinkStore()
    for d in store.digests():
        link = store.get(d)
        if link.owner_id != 1 or link.interval != 2:
            pruned._links[d] = link
    verdict = verify_chain(heads[1], identities[0].credential, pruned, depth=3)
    assert not verdict
    assert verdict.reason in ("missing-link", "missing-entry-link")


def test_wrong_owner_rejected(swarm5):
    _, identities = swarm5
    store = LinkStore()
    heads = _grow_pairwise(identities, store, 2)
    verdict = verify_chain(heads[1], identities[1].credential, store, depth=2)
    assert not verdict
    assert verdict.reason == "wrong-owner"


def test_depth_must_be_positive(swarm5):
    _, identities = swarm5
    store = LinkStore()
    link = extend_history(identities[0], None, EventList.empty(1), store)
    with pytest.raises(ValueError):
        verify_chain(link, identities[0].credential, store, depth=0)


# -- encounter acceptance ------------------------------------------------------


def _two_robot_links(identities, record=(True, True)):
    a, b = identities[0], identities[1]
    store = LinkStore()
    offers = {a.robot_id: offer_history(a, None), b.robot_id: offer_history(b, None)}
    links = {}
    for me, other, does_record in ((a, b, record[0]), (b, a, record[1])):
        chosen = [offers[other.robot_id]] if does_record else []
        events = build_event_list(me.robot_id, 1, chosen)
        links[me.robot_id] = extend_history(me, None, events, store)
    return links[a.robot_id], links[b.robot_id]


def test_mutual_records_accepted(swarm5):
    _, identities = swarm5
    link_a, link_b = _two_robot_links(identities, record=(True, True))
    assert accept_encounter(link_a, link_b)


def test_one_sided_record_unpaired(swarm5):
    """Omitting a met robot leaves the victim's claim unpaired."""
    _, identities = swarm5
    link_a, link_b = _two_robot_links(identities, record=(True, False))
    assert not accept_encounter(link_a, link_b)


def test_no_records_unpaired(swarm5):
    _, identities = swarm5
    link_a, link_b = _two_robot_links(identities, record=(False, False))
    assert not accept_encounter(link_a, link_b)


@settings(max_examples=20)
@given(record=st.tuples(st.booleans(), st.booleans()))
def test_accept_encounter_is_symmetric(record):
    _, identities = provision_swarm(2, seed=31)
    link_a, link_b = _two_robot_links(identities, record=record)
    assert accept_encounter(link_a, link_b) == accept_encounter(link_b, link_a)


def test_accept_encounter_interval_mismatch_raises(swarm5):
    _, identities = swarm5
    store = LinkStore()
    l1 = extend_history(identities[0], None, EventList.empty(1), store)
    l2a = extend_history(identities[1], None, EventList.empty(1), store)
    l2b = extend_history(identities[1], l2a, EventList.empty(2), store)
    with pytest.raises(ValueError):
        accept_encounter(l1, l2b)


# -- the store ----------------------------------------------------------------


def test_store_is_content_addressed(swarm5):
    _, identities = swarm5
    store = LinkStore()
    _grow_pairwise(identities, store, 3)
    for d in store.digests():
        assert link_digest(store.get(d)) == d


def test_first_links_of_different_owners_do_not_collide(swarm5):
    """Identical payloads, different owners: distinct store addresses."""
    _, identities = swarm5
    store = LinkStore()
    links = [extend_history(i, None, EventList.empty(1), store) for i in identities]
    assert len(store) == len(identities)
    assert len({link_digest(l) for l in links}) == len(identities)
    assert len({signed_digest(l) for l in links}) == 1


def test_closure_covers_referenced_history(swarm5):
    _, identities = swarm5
    store = LinkStore()
    heads = _grow_pairwise(identities, store, 3)
    closure = store.closure(link_digest(heads[1]))
    # everyone met everyone each interval, so the closure reaches every link
    # except the peers' final-interval links, which nothing references yet
    unreachable = {link_digest(heads[r]) for r in heads if r != 1}
    assert closure == frozenset(store.digests()) - unreachable


@settings(max_examples=25, deadline=None)
@given(meetings=st.lists(st.sets(st.tuples(st.integers(1, 4), st.integers(1, 4))), min_size=1, max_size=6))
def test_any_honest_construction_round_trips(meetings):
    """Chains built by any honest meeting sequence verify at full depth."""
    _, identities = provision_swarm(4, seed=55)
    by_id = {i.robot_id: i for i in identities}
    store = LinkStore()
    heads = {r: None for r in by_id}
    for t, round_pairs in enumerate(meetings, start=1):
        pairs = {(min(a, b), max(a, b)) for a, b in round_pairs if a != b}
        offers = {r: offer_history(by_id[r], heads[r]) for r in by_id}
        met = {r: [] for r in by_id}
        for a, b in pairs:
            met[a].append(offers[b])
            met[b].append(offers[a])
        heads = {
            r: extend_history(by_id[r], heads[r], build_event_list(r, t, met[r]), store)
            for r in by_id
        }
    for r, identity in by_id.items():
        verdict = verify_chain(heads[r], identity.credential, store, depth=len(meetings))
        assert verdict, (r, verdict)


def test_small_tamper_corpus(swarm5):
    """Any single-byte flip anywhere in a stored link is caught at full depth."""
    _, identities = swarm5
    store = LinkStore()
    heads = _grow_pairwise(identities, store, 4)
    owner = identities[0]
    chain = []
    link = heads[owner.robot_id]
    while link is not None:
        chain.append(link)
        link = store.get(link.prev_digest)
    rng = random.Random(88)
    for _ in range(300):
        target = rng.choice(chain)
        blob = bytearray(encode_link(target))
        blob[rng.randrange(len(blob))] ^= 1 << rng.randrange(8)
        try:
            mutated = decode_link(bytes(blob))
        except EncodingError:
            continue  # malformed bytes cannot even be parsed: rejected upstream
        copy = LinkStore()
        copy._links = dict(store._links)
        copy._links[link_digest(target)] = mutated
        head = mutated if target is chain[0] else heads[owner.robot_id]
        assert not verify_chain(head, owner.credential, copy, depth=4)
