"""Suspicion analysis over history chains, local and central.

A robot's local view is everything reachable from its own head link:
its records plus every history it ingested and re-referenced.  Evidence
that robot j was alive at interval t is either a link j signed at t or a
verified entry naming j inside someone's interval-t event list.  On top
of that view sit four detectors:

* ``detect_disappeared`` -- nobody has vouched for the robot within the
  last delta intervals.
* ``check_pairing``      -- too few of the robot's encounters are recorded
  by both sides.
* ``detect_collusion``   -- a pair co-meets in k consecutive intervals
  although p**k is below the plausibility threshold.
* ``update_revocation``  -- applies a pluggable policy to the evidence;
  what misbehavior costs a robot its standing is the swarm engineer's
  call, so the policy is just a function.

``central_audit`` is the post-task counterpart: it walks every collected
chain in full, checks signatures and linkage, cross-checks that every
claimed encounter is recorded by both participants, and reports coverage
gaps for robots that stopped extending their chains.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Iterable, Mapping

from .chain import GENESIS, HistoryLink, LinkStore, link_digest, signed_digest
from .crypto import Credential, Digest, verify
from .prob import pairing_threshold
from .sim import SimConfig, SimTrace


class InsufficientHistoryError(ValueError):
    """The view does not span the detection window yet."""


@dataclass(frozen=True)
class PairingVerdict:
    """Outcome of the paired-records check for one robot."""

    status: str  # "trusted" | "suspicious" | "indeterminate"
    paired: int
    unpaired: int
    threshold: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "paired": self.paired,
            "unpaired": self.unpaired,
            "threshold": self.threshold,
        }


def _link_verifies(link: HistoryLink, credential: Credential | None) -> bool:
    return credential is not None and verify(
        credential, signed_digest(link).value, link.signature
    )


def _entry_evidence_ok(entry, t: int, links: Mapping[Digest, HistoryLink]) -> bool:
    """Does this entry really witness its peer at interval t?

    Genesis-witness entries verify standalone; link references must
    resolve within the view to content of the right owner and interval,
    carrying a matching peer signature.
    """
    if entry.peer_id != entry.peer_credential.robot_id:
        return False
    if entry.peer_link_digest == GENESIS:
        return verify(entry.peer_credential, GENESIS.value, entry.peer_signature)
    resolved = links.get(entry.peer_link_digest)
    if resolved is None:
        return False
    return (
        link_digest(resolved) == entry.peer_link_digest
        and resolved.owner_id == entry.peer_id
        and resolved.interval == t - 1
        and entry.peer_signature == resolved.signature
        and verify(entry.peer_credential, signed_digest(resolved).value, entry.peer_signature)
    )


@dataclass
class LocalView:
    """Chain content one observer can resolve, verified at ingestion."""

    observer: int | None
    as_of: int
    links: dict[Digest, HistoryLink]
    params: SimConfig
    credentials: dict[int, Credential]

    @classmethod
    def from_trace(cls, trace: SimTrace, observer: int) -> "LocalView":
        head = trace.heads.get(observer)
        digests = trace.store.closure(head) if head is not None else frozenset()
        return cls._build(trace, observer, digests)

    @classmethod
    def central(cls, trace: SimTrace) -> "LocalView":
        """The post-task central perspective: union over all collected heads."""
        digests: set[Digest] = set()
        for head in trace.heads.values():
            if head is not None:
                digests |= trace.store.closure(head)
        return cls._build(trace, None, digests)

    @classmethod
    def _build(cls, trace: SimTrace, observer: int | None, digests: Iterable[Digest]) -> "LocalView":
        links: dict[Digest, HistoryLink] = {}
        for d in digests:
            link = trace.store.get(d)
            if link is None:
                continue
            if _link_verifies(link, trace.credentials.get(link.owner_id)):
                links[d] = link
        return cls(
            observer=observer,
            as_of=trace.config.intervals,
            links=links,
            params=trace.config,
            credentials=dict(trace.credentials),
        )

    @cached_property
    def evidence(self) -> dict[int, int]:
        """robot id -> latest interval with verified evidence it was alive."""
        seen: dict[int, int] = {}

        def note(robot: int, t: int) -> None:
            if seen.get(robot, 0) < t:
                seen[robot] = t

        for link in self.links.values():
            note(link.owner_id, link.interval)
            for entry in link.events.entries:
                if _entry_evidence_ok(entry, link.interval, self.links):
                    note(entry.peer_id, link.interval)
        return seen

    @cached_property
    def claims(self) -> frozenset[tuple[int, int, int]]:
        """(claimer, target, interval) for every verified entry in view."""
        out: set[tuple[int, int, int]] = set()
        for link in self.links.values():
            for entry in link.events.entries:
                if _entry_evidence_ok(entry, link.interval, self.links):
                    out.add((link.owner_id, entry.peer_id, link.interval))
        return frozenset(out)

    @cached_property
    def _owners_at(self) -> frozenset[tuple[int, int]]:
        """(owner, interval) pairs whose link is visible in this view."""
        return frozenset((link.owner_id, link.interval) for link in self.links.values())

    def unpaired_claims(self) -> tuple[tuple[int, int, int], ...]:
        """Claims with decisive omission evidence: the counterpart's link for
        that interval is visible and does not record the meeting.  Claims
        whose counterpart link is simply not visible yet prove nothing and
        are not listed."""
        claims = self.claims
        owners_at = self._owners_at
        return tuple(
            sorted(
                (a, b, t)
                for (a, b, t) in claims
                if (b, a, t) not in claims and (b, t) in owners_at
            )
        )

    def paired_intervals(self) -> dict[tuple[int, int], set[int]]:
        """(a, b) with a < b -> intervals in which both sides recorded the meeting."""
        claims = self.claims
        out: dict[tuple[int, int], set[int]] = {}
        for a, b, t in claims:
            if a < b and (b, a, t) in claims:
                out.setdefault((a, b), set()).add(t)
        return out


def detect_disappeared(view: LocalView, delta: int) -> frozenset[int]:
    """Robots with no verified evidence in the last ``delta`` intervals."""
    if view.as_of < delta:
        raise InsufficientHistoryError(
            f"view spans {view.as_of} intervals, need at least delta={delta}"
        )
    window_start = view.as_of - delta + 1
    evidence = view.evidence
    return frozenset(
        r
        for r in range(1, view.params.n + 1)
        if r != view.observer and evidence.get(r, 0) < window_start
    )


def check_pairing(view: LocalView, subject: int, alpha: float, n: int, p: float) -> PairingVerdict:
    """Trust verdict for ``subject`` from the paired share of its encounters.

    Counts only decidable evidence: an encounter is paired when both
    sides' records are visible, and decisively unpaired when the
    counterpart's link for that interval is visible but omits the
    meeting.  Records whose counterpart is simply not visible yet prove
    nothing either way.  Paired records aggregated across the window are
    compared against the single-interval expectation ceil((1-alpha)*n*p);
    a subject with any decisive omission against it and too few paired
    records to clear that bar is suspicious.  No decidable encounters at
    all is indeterminate, not suspicious: isolation may just be graph
    sparsity.
    """
    claims = view.claims
    owners_at = view._owners_at
    paired = 0
    unpaired = 0
    for a, b, t in claims:
        if subject not in (a, b):
            continue
        if (b, a, t) in claims:
            paired += 1
        elif (b, t) in owners_at:
            unpaired += 1
    paired //= 2  # each paired encounter contributes both directions
    if paired == 0 and unpaired == 0:
        return PairingVerdict(status="indeterminate", paired=0, unpaired=0, threshold=0)
    threshold = pairing_threshold(n, p, alpha)
    status = "trusted" if unpaired == 0 or paired >= threshold else "suspicious"
    return PairingVerdict(status=status, paired=paired, unpaired=unpaired, threshold=threshold)


def detect_collusion(view: LocalView, delta: int, epsilon: float) -> frozenset[tuple[tuple[int, int], int]]:
    """Pairs co-meeting in k consecutive window intervals with p**k < epsilon."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    p = view.params.p
    window_start = max(1, view.as_of - delta + 1)
    suspects: set[tuple[tuple[int, int], int]] = set()
    for pair, intervals in view.paired_intervals().items():
        run = best = 0
        for t in range(window_start, view.as_of + 1):
            run = run + 1 if t in intervals else 0
            best = max(best, run)
        if best >= 1 and p**best < epsilon:
            suspects.add((pair, best))
    return frozenset(suspects)


@dataclass
class SuspicionReport:
    """One observer's verdicts, each carrying its evidence."""

    observer: int | None
    as_of: int
    disappeared: frozenset[tuple[int, int]]  # (robot, last interval with evidence; 0 = never)
    unpaired_claims: tuple[tuple[int, int, int], ...]  # (claimer, target, interval)
    collusion_suspects: frozenset[tuple[tuple[int, int], int]]  # (pair, consecutive count)
    pairing: tuple[tuple[int, PairingVerdict], ...]
    revoked: frozenset[int] = field(default_factory=frozenset)

    def to_dict(self) -> dict[str, Any]:
        return {
            "observer": self.observer,
            "as_of": self.as_of,
            "disappeared": [
                {"robot": r, "last_seen": last} for r, last in sorted(self.disappeared)
            ],
            "unpaired_claims": [
                {"claimer": a, "target": b, "interval": t} for a, b, t in self.unpaired_claims
            ],
            "collusion_suspects": [
                {"pair": list(pair), "consecutive": k}
                for pair, k in sorted(self.collusion_suspects)
            ],
            "pairing": {str(r): verdict.to_dict() for r, verdict in self.pairing},
            "revoked": sorted(self.revoked),
        }


RevocationPolicy = Callable[[SuspicionReport], Iterable[int]]


def default_revocation_policy(report: SuspicionReport) -> set[int]:
    """Revoke the disappeared, the under-paired, and both halves of a colluding pair."""
    out = {r for r, _ in report.disappeared}
    out |= {r for r, verdict in report.pairing if verdict.status == "suspicious"}
    for pair, _ in report.collusion_suspects:
        out |= set(pair)
    return out


def never_revoke_policy(report: SuspicionReport) -> set[int]:
    return set()


def update_revocation(report: SuspicionReport, policy: RevocationPolicy | None = None) -> frozenset[int]:
    """Apply a revocation policy to a report; default policy above.

    The returned set is the observer's local blacklist: peers whose
    future exchange offers it ignores.  It is never propagated.
    """
    chosen = default_revocation_policy if policy is None else policy
    return frozenset(chosen(report))


def compile_report(
    view: LocalView,
    delta: int,
    alpha: float,
    epsilon: float,
    policy: RevocationPolicy | None = None,
) -> SuspicionReport:
    """Run every detector over one view and assemble the report."""
    evidence = view.evidence
    disappeared = frozenset(
        (r, evidence.get(r, 0)) for r in detect_disappeared(view, delta)
    )
    pairing = tuple(
        (r, check_pairing(view, r, alpha, view.params.n, view.params.p))
        for r in range(1, view.params.n + 1)
        if r != view.observer
    )
    report = SuspicionReport(
        observer=view.observer,
        as_of=view.as_of,
        disappeared=disappeared,
        unpaired_claims=view.unpaired_claims(),
        collusion_suspects=detect_collusion(view, delta, epsilon),
        pairing=pairing,
    )
    report.revoked = update_revocation(report, policy)
    return report


def collective_disappeared(trace: SimTrace, delta: int) -> frozenset[int]:
    """Robots that every honest observer independently marks disappeared.

    A lone observer misses a robot now and then just from graph
    sparsity; a robot the whole honest swarm lost track of is the
    outcome that matters for framing experiments.
    """
    adversaries = trace.config.adversary_ids()
    result: frozenset[int] | None = None
    for observer in range(1, trace.config.n + 1):
        if observer in adversaries or trace.heads.get(observer) is None:
            continue
        view = LocalView.from_trace(trace, observer)
        marked = detect_disappeared(view, delta)
        result = marked if result is None else result & marked
        if not result:
            return frozenset()
    return result if result is not None else frozenset()


@dataclass
class AuditReport:
    """Findings of the post-task central audit."""

    total_intervals: int
    verification_failures: tuple[tuple[int, int, str], ...]  # (robot, interval, reason)
    unpaired_claims: tuple[tuple[int, int, int], ...]  # (claimer, target, interval)
    gaps: tuple[tuple[int, int, int], ...]  # (robot, first missing, last missing)
    missing_heads: tuple[int, ...]
    encounters: frozenset[tuple[int, int, int]]  # (i, j, t) with i < j, recorded by both

    @property
    def clean(self) -> bool:
        return not (
            self.verification_failures or self.unpaired_claims or self.gaps or self.missing_heads
        )

    @property
    def findings_count(self) -> int:
        return (
            len(self.verification_failures)
            + len(self.unpaired_claims)
            + len(self.gaps)
            + len(self.missing_heads)
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "total_intervals": self.total_intervals,
            "clean": self.clean,
            "verification_failures": [
                {"robot": r, "interval": t, "reason": reason}
                for r, t, reason in self.verification_failures
            ],
            "unpaired_claims": [
                {"claimer": a, "target": b, "interval": t} for a, b, t in self.unpaired_claims
            ],
            "gaps": [
                {"robot": r, "from": lo, "to": hi} for r, lo, hi in self.gaps
            ],
            "missing_heads": list(self.missing_heads),
            "encounters": [list(e) for e in sorted(self.encounters)],
        }


def _audit_entry(entry, link: HistoryLink, store: LinkStore) -> str | None:
    """None if the entry verifies against the store, else the failure reason."""
    if entry.peer_id != entry.peer_credential.robot_id:
        return "entry-credential-mismatch"
    if entry.peer_link_digest == GENESIS:
        if not verify(entry.peer_credential, GENESIS.value, entry.peer_signature):
            return "bad-entry-signature"
        return None
    resolved = store.get(entry.peer_link_digest)
    if resolved is None:
        return "missing-entry-link"
    if link_digest(resolved) != entry.peer_link_digest:
        return "entry-digest-mismatch"
    if resolved.owner_id != entry.peer_id:
        return "entry-owner-mismatch"
    if resolved.interval != link.interval - 1:
        return "entry-interval-mismatch"
    if entry.peer_signature != resolved.signature or not verify(
        entry.peer_credential, signed_digest(resolved).value, entry.peer_signature
    ):
        return "bad-entry-signature"
    return None


def central_audit(
    heads: Mapping[int, HistoryLink | None],
    store: LinkStore,
    credentials: Mapping[int, Credential],
    total_intervals: int,
) -> AuditReport:
    """Verify every collected chain in full and cross-check pairing.

    Walks each chain from its head to genesis: owner signatures, digest
    linkage, interval ordering, and every event entry are checked
    against the store.  Claims from links whose own signature verified
    feed the pairing cross-check; entry-level forgeries are reported as
    verification failures and excluded from pairing.  Robots whose
    chains stop short of the final interval (or never started, or jump
    intervals) produce coverage-gap findings, missing heads are reported
    as such.
    """
    failures: list[tuple[int, int, str]] = []
    gaps: list[tuple[int, int, int]] = []
    missing: list[int] = []
    claims: set[tuple[int, int, int]] = set()

    for robot in sorted(heads):
        head = heads[robot]
        if head is None:
            missing.append(robot)
            continue
        credential = credentials.get(robot)
        link = head
        while True:
            if link.owner_id != robot:
                failures.append((robot, link.interval, "wrong-owner"))
                break
            if not _link_verifies(link, credential):
                failures.append((robot, link.interval, "bad-signature"))
            else:
                for entry in link.events.entries:
                    reason = _audit_entry(entry, link, store)
                    if reason is None:
                        claims.add((robot, entry.peer_id, link.interval))
                    else:
                        failures.append((robot, link.interval, reason))
            if link.prev_digest == GENESIS:
                if link.interval > 1:
                    gaps.append((robot, 1, link.interval - 1))
                break
            prev = store.get(link.prev_digest)
            if prev is None:
                failures.append((robot, link.interval - 1, "missing-link"))
                break
            if link_digest(prev) != link.prev_digest:
                failures.append((robot, link.interval - 1, "digest-mismatch"))
                break
            if prev.interval >= link.interval:
                failures.append((robot, prev.interval, "interval-order"))
                break
            if prev.interval != link.interval - 1:
                gaps.append((robot, prev.interval + 1, link.interval - 1))
            link = prev
        if head.interval < total_intervals:
            gaps.append((robot, head.interval + 1, total_intervals))

    unpaired = tuple(sorted((a, b, t) for (a, b, t) in claims if (b, a, t) not in claims))
    encounters = frozenset((a, b, t) for (a, b, t) in claims if a < b and (b, a, t) in claims)
    return AuditReport(
        total_intervals=total_intervals,
        verification_failures=tuple(failures),
        unpaired_claims=unpaired,
        gaps=tuple(gaps),
        missing_heads=tuple(missing),
        encounters=encounters,
    )


def audit_trace(trace: SimTrace) -> AuditReport:
    """Convenience wrapper: audit a finished run's collected heads."""
    return central_audit(
        trace.head_links(), trace.store, trace.credentials, trace.config.intervals
    )
