"""Corpus ingestion and result persistence.

Corpora are UTF-8 JSON-lines files, one record per sample with fields
{id, source, reference, language}. Result files use the same shape: one
record per attack result (schema-versioned, full trace included) followed
by a summary record carrying the aggregated metrics, marked
"summary": true.
"""

import dataclasses
import json
import logging

from .attack import AttackResult, TraceStep
from .errors import FormatError
from .metrics import MetricBundle, aggregate
from .validation import check_language, check_task

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

_MALFORMED_LIMIT = 0.10


@dataclasses.dataclass(frozen=True)
class Sample:
    """One corpus entry: a source snippet and its reference output (target
    code for translate/repair, an NL summary for summarize)."""

    id: str
    source_code: str
    reference: str
    task: str
    language: str


def load(path, task):
    """Parse a corpus file into Samples, in file order.

    Malformed lines are skipped with a warning; more than 10% malformed
    (over non-empty lines) raises FormatError. Duplicate ids raise
    FormatError immediately since downstream ordering keys on id.
    """
    task = check_task(task)
    samples = []
    seen_ids = set()
    malformed = 0
    considered = 0
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            considered += 1
            try:
                record = json.loads(line)
                sample = Sample(
                    id=str(record["id"]),
                    source_code=record["source"],
                    reference=record.get("reference", ""),
                    task=task,
                    language=check_language(record["language"]),
                )
                if not isinstance(sample.source_code, str) or not sample.source_code:
                    raise ValueError("source must be a non-empty string")
                if not isinstance(sample.reference, str):
                    raise ValueError("reference must be a string")
            except Exception as exc:
                malformed += 1
                log.warning("%s:%d: skipping malformed line (%s)", path, line_number, exc)
                continue
            if sample.id in seen_ids:
                raise FormatError(f"{path}:{line_number}: duplicate sample id {sample.id!r}")
            seen_ids.add(sample.id)
            samples.append(sample)
    if considered and malformed / considered > _MALFORMED_LIMIT:
        raise FormatError(
            f"{path}: {malformed}/{considered} lines malformed (limit {_MALFORMED_LIMIT:.0%})"
        )
    return samples


def save_corpus(samples, path):
    """Inverse of load(); embedded newlines survive via JSON escaping."""
    with open(path, "w", encoding="utf-8") as handle:
        for sample in samples:
            record = {
                "id": sample.id,
                "source": sample.source_code,
                "reference": sample.reference,
                "language": sample.language,
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def result_to_record(result):
    record = dataclasses.asdict(result)
    record["trace"] = [dataclasses.asdict(step) for step in result.trace]
    record["adversarial_tokens"] = list(result.adversarial_tokens)
    record["output_before"] = list(result.output_before)
    record["output_after"] = list(result.output_after)
    record["schema_version"] = SCHEMA_VERSION
    return record


def record_to_result(record):
    if record.get("schema_version") != SCHEMA_VERSION:
        raise FormatError(
            f"unsupported schema_version {record.get('schema_version')!r}"
        )
    fields = {f.name for f in dataclasses.fields(AttackResult)}
    kwargs = {k: v for k, v in record.items() if k in fields}
    kwargs["trace"] = tuple(TraceStep(**step) for step in record.get("trace", []))
    kwargs["adversarial_tokens"] = tuple(record.get("adversarial_tokens", ()))
    kwargs["output_before"] = tuple(record.get("output_before", ()))
    kwargs["output_after"] = tuple(record.get("output_after", ()))
    return AttackResult(**kwargs)


def save_results(results, path, extra_summary=None):
    """Write one record per result plus a trailing aggregate summary record
    ("summary": true). `extra_summary` entries (e.g. the run manifest) are
    merged into the summary record."""
    results = list(results)
    with open(path, "w", encoding="utf-8") as handle:
        for result in results:
            handle.write(json.dumps(result_to_record(result), ensure_ascii=False,
                                    sort_keys=True) + "\n")
        summary = {
            "summary": True,
            "schema_version": SCHEMA_VERSION,
            "metrics": aggregate(results).as_dict() if results else None,
        }
        if extra_summary:
            summary.update(extra_summary)
        handle.write(json.dumps(summary, ensure_ascii=False, sort_keys=True) + "\n")


def load_results(path):
    """Read back a result file: (results, summary_record)."""
    results = []
    summary = None
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{line_number}: invalid JSON ({exc})") from exc
            if record.get("summary"):
                summary = record
            else:
                results.append(record_to_result(record))
    return results, summary


def summary_bundle(summary_record):
    """MetricBundle from a summary record, or None when the run was empty."""
    metrics = (summary_record or {}).get("metrics")
    return MetricBundle(**metrics) if metrics else None
