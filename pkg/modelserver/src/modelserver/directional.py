"""Directional end-to-end check: does the attack degrade a served model?

Serves a checkpoint pair in-process, points the attack CLI at it over HTTP,
and reports on how many corpus samples the quality drop came out positive.
This is a direction-only check — it asks whether perturbations hurt the
served model at all, not whether any published success rate is reproduced.

The attack toolkit is driven through its command line, so the only contact
surface between the two packages is the wire protocol plus the result-file
format.
"""

import json
import pathlib
import subprocess

from .app import serve_in_thread

_DEFAULTS = {"p": 0.40, "k": 50, "epsilon": 0.5}


class DirectionalRunError(RuntimeError):
    """The attack run could not be completed."""


def _read_drops(results_path):
    drops = {}
    with open(results_path, "r", encoding="utf-8") as handle:
        for line in handle:
            record = json.loads(line)
            if record.get("summary"):
                continue
            drops[record["sample_id"]] = float(record["delta_drop"])
    return drops


def run_directional(config, corpus, out_dir, task="summarize", lang="java",
                    max_samples=20, attack_cli="codeattack", **attack_params):
    """Serve `config`'s checkpoints, attack `corpus` through the CLI, and
    summarize drop directions. Returns a dict with counts and the results
    path."""
    params = dict(_DEFAULTS)
    params.update(attack_params)
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / "directional_results.jsonl"

    with serve_in_thread(config) as base_url:
        command = [
            attack_cli, "attack",
            "--task", task,
            "--lang", lang,
            "--corpus", str(corpus),
            "--victim", base_url,
            "--masked-lm", base_url,
            "--p", str(params["p"]),
            "--k", str(params["k"]),
            "--epsilon", str(params["epsilon"]),
            "--max-samples", str(max_samples),
            "--out", str(results_path),
        ]
        completed = subprocess.run(command, capture_output=True, text=True)
    if completed.returncode != 0:
        raise DirectionalRunError(
            f"attack CLI exited {completed.returncode}:\n"
            f"{completed.stdout}\n{completed.stderr}")

    drops = _read_drops(results_path)
    positive = sum(1 for value in drops.values() if value > 0)
    return {
        "samples": len(drops),
        "positive_drop": positive,
        "fraction_positive": positive / len(drops) if drops else 0.0,
        "results_path": str(results_path),
        "attack_stdout": completed.stdout,
    }
