"""Cross-validated self-training over a problem corpus.

The loop: for each epoch, hand the current training set to the generator's
``on_epoch`` hook, sample a candidate solution for every unsolved generation
question, verify it by execution, and keep candidates that are correct and
canonically new.  A question leaves the generation set once ``max_solutions``
distinct solutions have been found; the loop stops early when the set is
empty.

Every state transition is appended to a line-delimited journal, so a run can
be resumed after an interruption by replaying the journal, and an auditor can
re-verify every kept solution from the journal alone.  Journals contain no
timestamps: two runs with the same configuration, seed, and deterministic
generator produce byte-identical files.
"""
from __future__ import annotations

import json
import os
import random
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Protocol

from .corpus import ProblemRecord
from .engine import Budget
from .parser import canonical_text, parse_program
from .prompts import MODE_WITH_PREDICATES, PROMPT_MODES, render_prompt_text
from .rewrites import rewrite_variants
from .terms import Program, canonicalize
from .verify import AccuracyReport, Verdict, VerdictKind, accuracy, verify_candidate

ENDPOINT_ENV_VAR = "RATLOG_GENERATOR_ENDPOINT"
TOKEN_ENV_VAR = "RATLOG_GENERATOR_TOKEN"

_VERDICT_COUNTER_KEYS = [k.value for k in VerdictKind] + ["skipped", "new"]


class GeneratorUnavailable(Exception):
    """The generator cannot produce a sample right now; skip the question."""


@dataclass(frozen=True)
class SelfTrainConfig:
    epochs: int
    max_solutions: int
    samples_per_question: int = 1
    seed: int = 0
    budget: Budget | None = None
    prompt_mode: str = MODE_WITH_PREDICATES

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.max_solutions < 1:
            raise ValueError("max_solutions must be at least 1")
        if self.samples_per_question < 1:
            raise ValueError("samples_per_question must be at least 1")
        if self.prompt_mode not in PROMPT_MODES:
            raise ValueError(f"prompt_mode must be one of {PROMPT_MODES}")

    def to_json(self) -> dict:
        return {
            "epochs": self.epochs,
            "max_solutions": self.max_solutions,
            "samples_per_question": self.samples_per_question,
            "seed": self.seed,
            "budget": None if self.budget is None else [self.budget.max_steps, self.budget.max_wall],
            "prompt_mode": self.prompt_mode,
        }


@dataclass(frozen=True)
class DiscoveredSolution:
    question_id: str
    solution: str  # canonical source text
    answer: Fraction


@dataclass
class SelfTrainState:
    """Mutable loop state; also the thing journal replay reconstructs."""

    train: list  # (question, solution) pairs
    generation: list  # ProblemRecord, still unsolved
    discovered: list = field(default_factory=list)  # DiscoveredSolution
    counts: dict = field(default_factory=dict)  # question id -> solutions found
    last_verdict: dict = field(default_factory=dict)  # question id -> Verdict

    def existing_for(self, question_id: str) -> list:
        return [d.solution for d in self.discovered if d.question_id == question_id]


@dataclass
class SelfTrainResult:
    discovered: list
    metrics: list  # one dict per completed epoch
    state: SelfTrainState


class Generator(Protocol):
    def on_epoch(self, train_pairs: list) -> None: ...

    def sample(self, record: ProblemRecord, prompt: str) -> str: ...


def render_prompt(record: ProblemRecord, mode: str, registry=None) -> str:
    """Instantiate the prompt template for one question."""
    return render_prompt_text(record.question, mode, registry)


def is_new_solution(candidate: Program, reference: Program, existing: Iterable[Program]) -> bool:
    """True when the candidate differs canonically from the reference and from
    every already-discovered solution."""
    cand = canonicalize(candidate).source_text
    if cand == canonicalize(reference).source_text:
        return False
    return all(cand != canonicalize(p).source_text for p in existing)


def _is_new_text(candidate_text: str, reference_text: str, existing_texts: Iterable[str]) -> bool:
    cand = canonical_text(candidate_text)
    if cand == canonical_text(reference_text):
        return False
    return all(cand != t for t in existing_texts)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

class LocalRewriteGenerator:
    """Deterministic generator backed by the rewrite rules.

    For each question it explores the rewrite closure of the reference
    solution breadth-first and proposes one unseen variant per call.  Once
    exhausted it falls back to echoing the reference, which verification
    accepts but novelty filtering rejects.  No randomness anywhere, so runs
    are reproducible byte for byte.
    """

    def __init__(self, variants_per_node: int = 8, budget: Budget | None = None, registry=None):
        self.variants_per_node = variants_per_node
        self.budget = budget
        self.registry = registry
        self.epochs_seen = 0
        self.last_train_size = 0
        self._pending: dict[str, list] = {}
        self._frontier: dict[str, list] = {}
        self._seen: dict[str, set] = {}

    def on_epoch(self, train_pairs: list) -> None:
        self.epochs_seen += 1
        self.last_train_size = len(train_pairs)

    def sample(self, record: ProblemRecord, prompt: str) -> str:
        qid = record.id
        if qid not in self._pending:
            reference = parse_program(record.reference_solution)
            self._pending[qid] = []
            self._frontier[qid] = [reference]
            self._seen[qid] = {canonicalize(reference).source_text}
        pending = self._pending[qid]
        frontier = self._frontier[qid]
        seen = self._seen[qid]
        while not pending and frontier:
            node = frontier.pop(0)
            for variant in rewrite_variants(
                node, self.variants_per_node, budget=self.budget, registry=self.registry
            ):
                canon = canonicalize(variant).source_text
                if canon not in seen:
                    seen.add(canon)
                    pending.append(variant)
                    frontier.append(variant)
        if pending:
            return canonicalize(pending.pop(0)).source_text
        return record.reference_solution


class RemoteGenerator:
    """Chat-style JSON-over-HTTP adapter for a model served elsewhere.

    The endpoint receives ``{"model", "messages", "temperature", "top_k",
    "top_p"}`` and must answer ``{"choices": [{"message": {"content": ...}}]}``.
    Transport failures are retried with linear backoff and then surface as
    GeneratorUnavailable.  Any training that happens behind the endpoint is
    the remote side's business; ``on_epoch`` is the hook where a real trainer
    would receive the current training set.
    """

    def __init__(
        self,
        endpoint: str | None = None,
        model: str = "default",
        token: str | None = None,
        temperature: float = 0.6,
        top_k: int = 40,
        top_p: float = 0.9,
        timeout: float = 30.0,
        max_retries: int = 3,
        backoff: float = 1.0,
    ):
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV_VAR)
        if not self.endpoint:
            raise ValueError(f"no endpoint given and {ENDPOINT_ENV_VAR} is not set")
        self.model = model
        self.token = token if token is not None else os.environ.get(TOKEN_ENV_VAR)
        self.temperature = temperature
        self.top_k = top_k
        self.top_p = top_p
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff

    def on_epoch(self, train_pairs: list) -> None:
        pass

    def sample(self, record: ProblemRecord, prompt: str) -> str:
        payload = json.dumps(
            {
                "model": self.model,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": self.temperature,
                "top_k": self.top_k,
                "top_p": self.top_p,
            }
        ).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        last_error = "no attempt made"
        for attempt in range(self.max_retries):
            if attempt:
                time.sleep(self.backoff * attempt)
            request = urllib.request.Request(self.endpoint, data=payload, headers=headers)
            try:
                with urllib.request.urlopen(request, timeout=self.timeout) as response:
                    body = json.loads(response.read().decode("utf-8"))
                return body["choices"][0]["message"]["content"]
            except (urllib.error.URLError, OSError, TimeoutError) as e:
                last_error = str(e)
            except (KeyError, IndexError, TypeError, json.JSONDecodeError) as e:
                raise GeneratorUnavailable(f"malformed generator response: {e}") from None
        raise GeneratorUnavailable(f"generator endpoint unreachable: {last_error}")


# ---------------------------------------------------------------------------
# Journal
# ---------------------------------------------------------------------------

class Journal:
    """Append-only, line-delimited JSON event log; flushed per event."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("a", encoding="utf-8")

    def append(self, event: dict) -> None:
        self._fh.write(json.dumps(event, sort_keys=True) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


class _NullJournal:
    path = None

    def append(self, event: dict) -> None:
        pass

    def close(self) -> None:
        pass


def read_journal(path) -> list[dict]:
    events = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(json.loads(line))
    return events


# ---------------------------------------------------------------------------
# The training loop
# ---------------------------------------------------------------------------

def _normalize_train(train) -> tuple[list, set]:
    """Accept records or (question, solution) pairs; return pairs + id set."""
    pairs = []
    ids = set()
    for item in train:
        if isinstance(item, ProblemRecord):
            pairs.append((item.question, item.reference_solution))
            ids.add(item.id)
        else:
            question, solution = item
            pairs.append((question, solution))
    return pairs, ids


def _verdict_event_fields(verdict: Verdict) -> dict:
    return {
        "kind": verdict.kind.value,
        "answer": None if verdict.candidate_answer is None else str(verdict.candidate_answer),
        "steps": verdict.steps_used,
        "detail": verdict.detail,
    }


def _verdict_from_event(event: dict, reference_answer) -> Verdict:
    answer = event.get("answer")
    return Verdict(
        kind=VerdictKind(event["kind"]),
        reference_answer=reference_answer,
        candidate_answer=None if answer is None else Fraction(answer),
        steps_used=event.get("steps", 0),
        detail=event.get("detail", ""),
    )


class _Replay:
    """State reconstructed from an existing journal, plus the resume cursor."""

    def __init__(self, events: list, config: SelfTrainConfig, train_pairs: list, records: list):
        if not events or events[0].get("event") != "run_start":
            raise ValueError("journal does not start with a run_start event")
        if events[0]["config"] != config.to_json():
            raise ValueError("journal was written by a run with a different configuration")
        by_id = {r.id: r for r in records}
        if events[0]["generation"] != [r.id for r in records]:
            raise ValueError("journal was written for a different generation set")

        self.state = SelfTrainState(train=list(train_pairs), generation=list(records))
        self.state.counts = {r.id: 0 for r in records}
        self.rng = random.Random(config.seed)
        self.metrics: list[dict] = []
        self.finished = False
        self.current_epoch = 0
        self.epoch_open = False
        self.pending_ids: list[str] = []
        self.samples_taken: dict[str, int] = {}
        self.skipped_ids: set[str] = set()
        self.epoch_counter: dict[str, int] = {}
        self.shuffled = False

        for event in events[1:]:
            name = event["event"]
            if name == "epoch_start":
                self.current_epoch = event["epoch"]
                self.epoch_open = True
                self.pending_ids = list(event["pending"])
                self.samples_taken = {}
                self.skipped_ids = set()
                self.epoch_counter = {k: 0 for k in _VERDICT_COUNTER_KEYS}
                self.shuffled = False
            elif name == "sample":
                qid = event["qid"]
                record = by_id[qid]
                self.samples_taken[qid] = self.samples_taken.get(qid, 0) + 1
                if event["kind"] == "skipped":
                    self.skipped_ids.add(qid)
                    self.epoch_counter["skipped"] += 1
                    continue
                verdict = _verdict_from_event(event, record.reference_answer)
                self.state.last_verdict[qid] = verdict
                self.epoch_counter[event["kind"]] += 1
                if event.get("new"):
                    self.epoch_counter["new"] += 1
                    answer = Fraction(event["answer"])
                    self.state.discovered.append(
                        DiscoveredSolution(qid, event["candidate"], answer)
                    )
                    self.state.train.append((record.question, event["candidate"]))
                    self.state.counts[qid] += 1
            elif name == "question_done":
                qid = event["qid"]
                self.state.generation = [r for r in self.state.generation if r.id != qid]
            elif name == "shuffle":
                self.rng.shuffle(self.state.train)
                self.shuffled = True
            elif name == "epoch_end":
                self.metrics.append({k: v for k, v in event.items() if k != "event"})
                self.epoch_open = False
            elif name == "run_end":
                self.finished = True


def run_self_training(
    config: SelfTrainConfig,
    train,
    generation: list,
    generator,
    journal_path=None,
    resume: bool = False,
    jobs: int = 1,
) -> SelfTrainResult:
    """Run the full self-training loop; see the module docstring.

    ``train`` may hold ProblemRecords or plain (question, solution) pairs.
    With ``resume=True`` an existing journal at ``journal_path`` is replayed
    and the run continues from its last recorded transition.
    """
    train_pairs, train_ids = _normalize_train(train)
    records = list(generation)
    overlap = train_ids & {r.id for r in records}
    if overlap:
        raise ValueError(f"training and generation sets overlap: {sorted(overlap)}")
    for record in records:
        if record.reference_answer is None:
            raise ValueError(f"generation record {record.id} has no validated answer")

    replay = None
    if resume and journal_path is not None and Path(journal_path).exists():
        events = read_journal(journal_path)
        if events:
            replay = _Replay(events, config, train_pairs, records)

    journal = Journal(journal_path) if journal_path is not None else _NullJournal()
    try:
        if replay is None:
            state = SelfTrainState(train=list(train_pairs), generation=list(records))
            state.counts = {r.id: 0 for r in records}
            rng = random.Random(config.seed)
            metrics: list[dict] = []
            journal.append(
                {
                    "event": "run_start",
                    "config": config.to_json(),
                    "train_size": len(train_pairs),
                    "generation": [r.id for r in records],
                }
            )
            start_epoch = 1
            resume_cursor = None
        else:
            if replay.finished:
                return SelfTrainResult(
                    discovered=list(replay.state.discovered),
                    metrics=replay.metrics,
                    state=replay.state,
                )
            state = replay.state
            rng = replay.rng
            metrics = replay.metrics
            if replay.epoch_open:
                start_epoch = replay.current_epoch
                resume_cursor = replay
            else:
                start_epoch = replay.current_epoch + 1
                resume_cursor = None

        epochs_run = len(metrics)
        for epoch in range(start_epoch, config.epochs + 1):
            if not state.generation:
                break
            resuming = resume_cursor is not None and resume_cursor.current_epoch == epoch
            generator.on_epoch(list(state.train))
            if resuming:
                pending = [r for r in records if r.id in set(resume_cursor.pending_ids)]
                pending.sort(key=lambda r: resume_cursor.pending_ids.index(r.id))
                samples_taken = dict(resume_cursor.samples_taken)
                skipped = set(resume_cursor.skipped_ids)
                counter = dict(resume_cursor.epoch_counter)
                already_shuffled = resume_cursor.shuffled
            else:
                pending = list(state.generation)
                samples_taken = {}
                skipped = set()
                counter = {k: 0 for k in _VERDICT_COUNTER_KEYS}
                already_shuffled = False
                journal.append(
                    {"event": "epoch_start", "epoch": epoch, "pending": [r.id for r in pending]}
                )

            for record in pending:
                _run_question(
                    config,
                    state,
                    generator,
                    record,
                    epoch,
                    journal,
                    counter,
                    start_at=samples_taken.get(record.id, 0),
                    skip=record.id in skipped,
                    jobs=jobs,
                )

            if not already_shuffled:
                rng.shuffle(state.train)
                journal.append({"event": "shuffle", "epoch": epoch})
            epoch_metrics = {
                "epoch": epoch,
                "generation_remaining": len(state.generation),
                "discovered_total": len(state.discovered),
                **counter,
            }
            metrics.append(epoch_metrics)
            journal.append({"event": "epoch_end", **epoch_metrics})
            epochs_run += 1
            resume_cursor = None
            if not state.generation:
                break

        journal.append(
            {"event": "run_end", "discovered_total": len(state.discovered), "epochs_run": epochs_run}
        )
    finally:
        journal.close()
    return SelfTrainResult(discovered=list(state.discovered), metrics=metrics, state=state)


def _run_question(
    config: SelfTrainConfig,
    state: SelfTrainState,
    generator,
    record: ProblemRecord,
    epoch: int,
    journal,
    counter: dict,
    start_at: int = 0,
    skip: bool = False,
    jobs: int = 1,
) -> None:
    qid = record.id
    if state.counts.get(qid, 0) >= config.max_solutions:
        # A resumed run can land between reaching the cap and recording the
        # removal; re-apply the removal so the journal stays consistent.
        if any(r.id == qid for r in state.generation):
            state.generation = [r for r in state.generation if r.id != qid]
            journal.append({"event": "question_done", "epoch": epoch, "qid": qid})
        return
    if skip or not any(r.id == qid for r in state.generation):
        return
    prompt = render_prompt(record, config.prompt_mode)

    remaining = config.samples_per_question - start_at
    if remaining <= 0:
        return

    candidates: list[str] = []
    for _ in range(remaining):
        try:
            candidates.append(generator.sample(record, prompt))
        except GeneratorUnavailable as e:
            # The question sits out this epoch; it stays in the generation set.
            journal.append(
                {
                    "event": "sample",
                    "epoch": epoch,
                    "qid": qid,
                    "sample_index": start_at + len(candidates),
                    "kind": "skipped",
                    "detail": str(e),
                }
            )
            counter["skipped"] += 1
            return

    def check(text: str) -> Verdict:
        return verify_candidate(text, record, budget=config.budget)

    if jobs > 1 and len(candidates) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            verdicts = list(pool.map(check, candidates))
    else:
        verdicts = [check(c) for c in candidates]

    for offset, (text, verdict) in enumerate(zip(candidates, verdicts)):
        if state.counts[qid] >= config.max_solutions:
            break
        is_new = False
        canonical = None
        if verdict.accepted:
            is_new = _is_new_text(text, record.reference_solution, state.existing_for(qid))
            if is_new:
                canonical = canonical_text(text)
        event = {
            "event": "sample",
            "epoch": epoch,
            "qid": qid,
            "sample_index": start_at + offset,
            "new": is_new,
            "candidate": canonical,
            **_verdict_event_fields(verdict),
        }
        journal.append(event)
        counter[verdict.kind.value] += 1
        state.last_verdict[qid] = verdict
        if is_new:
            counter["new"] += 1
            state.discovered.append(DiscoveredSolution(qid, canonical, verdict.candidate_answer))
            state.train.append((record.question, canonical))
            state.counts[qid] += 1
            if state.counts[qid] >= config.max_solutions:
                state.generation = [r for r in state.generation if r.id != qid]
                journal.append({"event": "question_done", "epoch": epoch, "qid": qid})


# ---------------------------------------------------------------------------
# Auditing and cross-validation
# ---------------------------------------------------------------------------

def audit_journal(journal_path, records_by_id: dict, budget: Budget | None = None) -> list[str]:
    """Re-verify every solution a journal claims to have discovered.

    Returns a list of problems; an empty list means the journal is sound:
    every kept candidate still verifies as accepted, counts are consistent,
    and no question exceeded its solution cap.
    """
    problems: list[str] = []
    counts: dict[str, int] = {}
    cap = None
    for event in read_journal(journal_path):
        if event["event"] == "run_start":
            cap = event["config"]["max_solutions"]
        if event["event"] != "sample" or not event.get("new"):
            continue
        qid = event["qid"]
        record = records_by_id.get(qid)
        if record is None:
            problems.append(f"{qid}: not in the provided corpus")
            continue
        verdict = verify_candidate(event["candidate"], record, budget=budget)
        if not verdict.accepted:
            problems.append(f"{qid}: kept solution re-verifies as {verdict.kind.value}")
        counts[qid] = counts.get(qid, 0) + 1
    if cap is not None:
        for qid, n in counts.items():
            if n > cap:
                problems.append(f"{qid}: {n} solutions kept, cap is {cap}")
    return problems


@dataclass
class CrossValResult:
    report: AccuracyReport
    fold_results: list


def run_cross_validation(
    config: SelfTrainConfig,
    records: list,
    fold_plan,
    generator,
    journal_dir=None,
    jobs: int = 1,
) -> CrossValResult:
    """Run self-training once per fold (fold = generation set, remainder =
    training set) and aggregate accept coverage across folds."""
    folds = fold_plan.folds(records)
    verdicts_by_fold: dict[int, list] = {}
    fold_results = []
    for fold_index, fold_records in enumerate(folds):
        train = [r for r in records if fold_plan.assignment[r.id] != fold_index]
        journal_path = None
        if journal_dir is not None:
            journal_path = Path(journal_dir) / f"journal_fold{fold_index}.jsonl"
        result = run_self_training(
            config, train, fold_records, generator, journal_path=journal_path, jobs=jobs
        )
        fold_results.append(result)
        verdicts = []
        for record in fold_records:
            verdict = result.state.last_verdict.get(record.id)
            if verdict is None:
                verdict = Verdict(
                    VerdictKind.RUNTIME_ERROR,
                    record.reference_answer,
                    detail="no candidate was ever sampled for this question",
                )
            verdicts.append(verdict)
        verdicts_by_fold[fold_index] = verdicts
    return CrossValResult(report=accuracy(verdicts_by_fold), fold_results=fold_results)
