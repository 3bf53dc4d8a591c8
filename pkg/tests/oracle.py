"""Independent straight-line replay of the scenario semantics.

No store, no engine, no regime objects: plain lists and dicts follow
the documented scenario contract (stream splitting, draw order, round
phases) and compute every report field from scratch. The main
implementation must match this replay byte for byte; keep this file
free of govmem imports so the two paths stay independent.
"""

from __future__ import annotations

import json
import math

from numpy.random import PCG64, Generator, SeedSequence

ROLES = ("architect", "ops", "archivist", "critic")
EVIDENCE_RATE = 0.75

DEFAULT_CONSTITUTION = [
    {
        "rule_id": "require-evidence",
        "predicate": {"check": "evidence_min", "count": 1},
        "on_fail": "reject",
    }
]


def _eval_rule(predicate, cand):
    check = predicate["check"]
    if check == "evidence_min":
        return (1 if cand["evidence"] else 0) >= predicate["count"]
    if check == "payload_present":
        return cand["payload"].get(predicate["key"]) not in (None, "", False)
    if check == "payload_absent":
        return cand["payload"].get(predicate["key"]) in (None, "", False, 0)
    raise ValueError(f"oracle does not model predicate {check!r}")


def replay(config: dict, regime: str) -> dict:
    n = config["n_agents"]
    rounds = config["rounds"]
    cpr = config["candidates_per_agent_per_round"]
    f = config["false_fraction"]
    p_a = config["audit_probability"]
    q = config["oracle_accuracy"]
    d = config["metric_detection"]
    constitution = sorted(
        config.get("constitution") or DEFAULT_CONSTITUTION, key=lambda r: r["rule_id"]
    )
    seed = config["seed"]

    children = SeedSequence(seed).spawn(n + 4)
    agent_rng = [Generator(PCG64(children[i])) for i in range(n)]
    audit_rng = Generator(PCG64(children[n]))
    oracle_rng = Generator(PCG64(children[n + 1]))
    metric_rng = Generator(PCG64(children[n + 2]))
    stratify_rng = Generator(PCG64(children[n + 3]))

    total = rounds * n * cpr
    n_false = math.floor(f * total + 0.5)
    false_slots = set(stratify_rng.permutation(total)[:n_false].tolist())

    cands: list[dict] = []
    active: dict[str, int] = {}
    queue: list[int] = []
    peak = 0
    latencies: list[int] = []
    in_flight: set[str] = set()
    local_sets: list[set[str]] = [set() for _ in range(n)]

    def apply(idx: int, decision: str, rnd: int) -> None:
        cand = cands[idx]
        if decision == "ratify":
            cand["status"] = "ratified"
            cand["ratified_round"] = rnd
            prior = cand["supersedes"]
            if prior is not None:
                old = cands[prior]
                old["status"] = "superseded"
                if not old["truth"] and old.get("ratified_round") is not None:
                    latencies.append(rnd - old["ratified_round"])
            active[cand["resource"]] = idx
        elif decision == "reject":
            cand["status"] = "rejected"
        elif decision == "abstain":
            cand["status"] = "abstained"
        else:
            raise ValueError(decision)
        in_flight.discard(cand["resource"])

    def submit(idx: int, rnd: int) -> None:
        nonlocal peak
        cand = cands[idx]
        if regime == "ungoverned":
            apply(idx, "ratify", rnd)
        elif regime == "constitutional":
            for rule in constitution:
                if not _eval_rule(rule["predicate"], cand):
                    apply(idx, rule.get("on_fail", "reject"), rnd)
                    return
            apply(idx, "ratify", rnd)
        elif regime == "automatic":
            if not cand["evidence"]:
                apply(idx, "reject", rnd)
            elif not cand["truth"]:
                detected = metric_rng.random() < d
                apply(idx, "reject" if detected else "ratify", rnd)
            else:
                apply(idx, "ratify", rnd)
        elif regime == "human_ratified":
            cand["status"] = "pending_review"
            queue.append(idx)
            peak = max(peak, len(queue))
            if cand["correction"]:
                in_flight.add(cand["resource"])
        else:
            raise ValueError(regime)

    for rnd in range(1, rounds + 1):
        # phase 1: every agent submits its candidates, then one local note
        for i in range(n):
            role = ROLES[i % len(ROLES)]
            for k in range(cpr):
                slot = ((rnd - 1) * n + i) * cpr + k
                has_evidence = agent_rng[i].random() < EVIDENCE_RATE
                cands.append(
                    {
                        "slot": slot,
                        "truth": slot not in false_slots,
                        "evidence": has_evidence,
                        "status": None,
                        "resource": f"obs-sim-{i:02d}-r{rnd}-k{k}",
                        "correction": False,
                        "supersedes": None,
                        "payload": {
                            "topic": f"{role}/round-{rnd}/obs-{k}",
                            "slot": slot,
                        },
                    }
                )
                submit(len(cands) - 1, rnd)
            u_pool = agent_rng[i].random()
            note_idx = int(agent_rng[i].integers(0, 20))
            text = (
                f"{role}-heuristic-{note_idx}"
                if u_pool < 0.5
                else f"common-practice-{note_idx}"
            )
            local_sets[i].add(
                json.dumps({"note": text}, sort_keys=True, separators=(",", ":"))
            )

        # phase 2: the scripted ratifier drains the queue
        if regime == "human_ratified":
            drain, queue[:] = queue[:], []
            for idx in drain:
                cand = cands[idx]
                if not cand["evidence"]:
                    apply(idx, "reject", rnd)
                    continue
                correct = oracle_rng.random() < q
                wanted = "ratify" if cand["truth"] else "reject"
                apply(idx, wanted if correct else ("reject" if wanted == "ratify" else "ratify"), rnd)

        # phase 3: audits over active false records, creation order
        for idx in range(len(cands)):
            cand = cands[idx]
            if (
                cand["status"] == "ratified"
                and not cand["truth"]
                and active.get(cand["resource"]) == idx
                and cand["resource"] not in in_flight
            ):
                if audit_rng.random() < p_a:
                    cands.append(
                        {
                            "slot": cand["slot"],
                            "truth": True,
                            "evidence": True,
                            "status": None,
                            "resource": cand["resource"],
                            "correction": True,
                            "supersedes": idx,
                            "payload": {
                                "topic": cand["payload"]["topic"],
                                "slot": cand["slot"],
                                "correction": True,
                            },
                        }
                    )
                    submit(len(cands) - 1, rnd)

    active_false = sum(1 for idx in active.values() if not cands[idx]["truth"])
    persistence = active_false / total if total else 0.0

    latency = sum(latencies) / len(latencies) if latencies else None

    active_records = [cands[idx] for idx in active.values()]
    fidelity = (
        sum(1 for c in active_records if c["evidence"]) / len(active_records)
        if active_records
        else 1.0
    )

    pair_sims = []
    for i in range(n):
        for j in range(i + 1, n):
            a, b = local_sets[i], local_sets[j]
            if not a and not b:
                pair_sims.append(1.0)
            else:
                pair_sims.append(len(a & b) / len(a | b))
    divergence = 1.0 - sum(pair_sims) / len(pair_sims)

    counts: dict[str, int] = {}
    for cand in cands:
        counts[cand["status"]] = counts.get(cand["status"], 0) + 1

    return {
        "regime": regime,
        "false_memory_persistence": persistence,
        "mean_correction_latency_rounds": latency,
        "provenance_fidelity": fidelity,
        "selection_traceability": 1.0,
        "role_divergence": divergence,
        "queue_peak": peak,
        "counts": counts,
    }


def report_bytes(report: dict) -> bytes:
    return json.dumps(
        report, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")
