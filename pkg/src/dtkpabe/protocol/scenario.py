"""Scenario files (JSON in) and transcripts (JSON lines out).

Scenario layout::

    {
      "config": {"n": 5, "k": 3, "tp": 10, "seed": 7,
                 "universe": ["A", "B", "C"], "area": "area-1",
                 "group": "bls12-381"},
      "arrivals": [{"time": 1.0, "ru": "RU1", "attributes": ["A", "B"],
                    "payload": "bid 42 kWh @ 0.11"}, ...],
      "aos": [{"name": "AO1", "policy": {"and": [{"attr": "A"}, {"attr": "B"}]},
               "decrypt_times": [3.5, 10.5]}]
    }

Payloads are UTF-8 text (``payload``) or hex (``payload_hex``).
"""
from __future__ import annotations

import json
from collections.abc import Mapping
from pathlib import Path

from .simulator import AODefinition, Arrival, TransactionConfig, Transcript, run_scenario


def parse_scenario(doc: Mapping) -> tuple[TransactionConfig, list[Arrival], list[AODefinition]]:
    try:
        conf = dict(doc["config"])
        cfg = TransactionConfig(
            n=int(conf["n"]), k=int(conf["k"]), tp=float(conf["tp"]), seed=int(conf["seed"]),
            universe=tuple(conf["universe"]), area=conf.get("area", "area-1"),
            group=conf.get("group", "bls12-381"),
        )
        arrivals = []
        for a in doc.get("arrivals", []):
            if "payload_hex" in a:
                payload = bytes.fromhex(a["payload_hex"])
            else:
                payload = a.get("payload", "").encode()
            arrivals.append(Arrival(float(a["time"]), str(a["ru"]), tuple(a["attributes"]), payload))
        aos = [AODefinition(o["name"], o["policy"], tuple(float(t) for t in o.get("decrypt_times", [])))
               for o in doc.get("aos", [])]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed scenario: {exc!r}") from exc
    return cfg, arrivals, aos


def load_scenario(path) -> tuple[TransactionConfig, list[Arrival], list[AODefinition]]:
    return parse_scenario(json.loads(Path(path).read_text(encoding="utf-8")))


def run_scenario_file(path, out=None) -> Transcript:
    cfg, arrivals, aos = load_scenario(path)
    transcript = run_scenario(cfg, arrivals, aos)
    if out is not None:
        transcript.write(out)
    return transcript
