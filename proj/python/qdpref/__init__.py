"""Python access to the dungeon-design core: scoring, the preference blend, sessions and the harness."""

import json

from ._core import (
    QdprefError,
    Session as _Session,
    adhoc_matrix,
    analyze_room,
    combined_fitness,
    compute_weights,
)
from ._core import default_config as _default_config
from ._core import replay_log as _replay_log
from ._core import run_experiment as _run_experiment

__all__ = [
    "QdprefError",
    "Session",
    "adhoc_matrix",
    "analyze_room",
    "combined_fitness",
    "compute_weights",
    "default_config",
    "error_code",
    "replay_log",
    "run_experiment",
]


def default_config():
    """Every session tunable with its default value."""
    return json.loads(_default_config())


def error_code(exc):
    """The ErrorCode name carried by a QdprefError."""
    return str(exc).split("|", 1)[0]


class Session:
    """Lockstep session; messages and replies are plain dicts."""

    def __init__(self, seed=0, config=None, id="py"):
        self._s = _Session(seed, json.dumps(config) if config else "", id)

    @classmethod
    def load(cls, path):
        obj = cls.__new__(cls)
        obj._s = _Session.load(str(path))
        return obj

    def send(self, kind, payload=None, seq=None):
        msg = {"kind": kind, "payload": payload if payload is not None else {}}
        if seq is not None:
            msg["seq"] = seq
        return [json.loads(r) for r in self._s.handle_message(json.dumps(msg))]

    def advance(self, generations):
        return [json.loads(r) for r in self._s.advance(generations)]

    def finish_all_training(self):
        return [json.loads(r) for r in self._s.finish_all_training()]

    def publish(self):
        return json.loads(self._s.publish())

    def save(self, path):
        self._s.save(str(path))

    def to_json(self):
        return json.loads(self._s.to_json())

    @property
    def generation(self):
        return self._s.generation

    @property
    def room(self):
        return self._s.active_room_tiles

    @property
    def status(self):
        return self._s.status

    @property
    def stream_digest(self):
        return self._s.stream_digest


def run_experiment(scenario, episodes, seed, out_dir="", config=None, burst=500):
    """Returns (report.csv text, stream digest)."""
    return _run_experiment(scenario, episodes, seed, str(out_dir), json.dumps(config) if config else "", burst)


def replay_log(path):
    """Replays a saved session and returns its stream digest; raises QdprefError on divergence."""
    return _replay_log(str(path))
