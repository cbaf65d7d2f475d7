"""Scenario files: YAML documents with a versioned schema line.

    schema: smsm-scenario/1
    kind: multicast            # multicast | gossip | code-audit
    seed: 7
    network: {preset: two-source, q: 256, k: 2, payload: 4}
    code: {type: coset, generator: [[1, 1]]}
    adversary: {w: 1, k_s: 1}

See the README for every field.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
import yaml

from . import binning, coset
from .field import Field
from .gossip import EXCHANGES, PUSH_PULL, GossipConfig
from .network import NetworkSpec, two_source_network

SCHEMA = "smsm-scenario/1"
KINDS = ("multicast", "gossip", "code-audit")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Adversary:
    w: int = 0
    k_s: int = 1
    scope: str = "coset"
    max_sets: int = 10_000
    cap: int = 1 << 20


@dataclass(frozen=True)
class Scenario:
    kind: str
    seed: int
    network: NetworkSpec | None = None
    gossip: GossipConfig | None = None
    code: dict = dc_field(default_factory=dict)
    adversary: Adversary = Adversary()
    trials: int = 1
    source_policy: str = "column-check"
    flooding_trials: int = 200
    flooding_loss: float | None = None
    significance: float = 0.01
    eps: float = 0.05
    base: Path = Path(".")

    @property
    def field(self) -> Field:
        if self.network is not None:
            return self.network.field
        if self.gossip is not None:
            return self.gossip.field
        return Field(int(self.code.get("q", 2)))


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ScenarioError(f"{where}: missing required field {key!r}")
    return d[key]


def _mapping(value, where: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ScenarioError(f"{where} must be a mapping")
    return value


def _network(d: dict) -> NetworkSpec:
    if "preset" in d:
        if d["preset"] != "two-source":
            raise ScenarioError(f"unknown network preset {d['preset']!r}")
        return two_source_network(q=int(d.get("q", 256)), k=int(d.get("k", 2)), payload=int(d.get("payload", 4)))
    sources = _require(d, "sources", "network")
    if isinstance(sources, dict):
        sources = list(sources.items())
    return NetworkSpec(
        nodes=tuple(str(n) for n in _require(d, "nodes", "network")),
        edges=tuple((str(e[0]), str(e[1]), int(e[2]) if len(e) > 2 else 1) for e in d.get("edges", [])),
        sources=tuple((str(s), int(k)) for s, k in sources),
        destinations=tuple(str(x) for x in d.get("destinations", [])),
        q=int(d.get("q", 2)),
        payload=int(d.get("payload", 1)),
    )


def _gossip(d: dict, seed: int) -> GossipConfig:
    sources = d.get("sources", {})
    if isinstance(sources, dict):
        sources = list(sources.items())
    exchange = d.get("exchange", PUSH_PULL)
    if exchange not in EXCHANGES:
        raise ScenarioError(f"gossip.exchange must be one of {EXCHANGES}")
    return GossipConfig(
        v=int(_require(d, "v", "gossip")),
        sources=tuple((int(s), int(k)) for s, k in sources),
        q=int(d.get("q", 2)),
        exchange=exchange,
        payload=int(d.get("payload", 1)),
        max_rounds=int(d.get("max_rounds", 500)),
        seed=seed,
    )


def parse_scenario(text: str, base: Path | str = ".") -> Scenario:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a YAML mapping")
    if doc.get("schema") != SCHEMA:
        raise ScenarioError(f"expected 'schema: {SCHEMA}', got {doc.get('schema')!r}")
    kind = _require(doc, "kind", "scenario")
    if kind not in KINDS:
        raise ScenarioError(f"kind must be one of {KINDS}")
    seed = int(doc.get("seed", 0))
    adv = Adversary(**_mapping(doc.get("adversary"), "adversary"))
    code = _mapping(doc.get("code"), "code")
    run = _mapping(doc.get("run"), "run")
    flooding = _mapping(doc.get("flooding"), "flooding")
    kw = dict(
        kind=kind,
        seed=seed,
        code=code,
        adversary=adv,
        trials=int(run.get("trials", doc.get("trials", 1))),
        source_policy=run.get("source_policy", "column-check"),
        flooding_trials=int(flooding.get("trials", 200)),
        flooding_loss=flooding.get("loss"),
        significance=float(run.get("significance", 0.01)),
        eps=float(run.get("eps", 0.05)),
        base=Path(base),
    )
    try:
        if kind == "multicast":
            kw["network"] = _network(_mapping(_require(doc, "network", "multicast scenario"), "network"))
        elif kind == "gossip":
            kw["gossip"] = _gossip(_mapping(_require(doc, "gossip", "gossip scenario"), "gossip"), seed)
        elif not code:
            raise ScenarioError("code-audit scenario needs a code section")
    except (TypeError, KeyError) as exc:
        raise ScenarioError(f"malformed scenario: {exc}") from exc
    if kw["source_policy"] not in ("uniform", "column-check"):
        raise ScenarioError("run.source_policy must be 'uniform' or 'column-check'")
    if adv.w < 0 or adv.k_s < 1:
        raise ScenarioError("adversary.w must be >= 0 and adversary.k_s >= 1")
    sc = Scenario(**kw)
    if code:
        build_code(sc)  # validate referenced files and parameters now
    return sc


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    return parse_scenario(text, path.parent)


def build_code(sc: Scenario, k: int | None = None):
    """The encoder named by the code section: a CosetCode or a BinCodebook."""
    c = sc.code
    kind = c.get("type", "coset")
    if k is None:
        if sc.network is not None and sc.network.sources:
            k = sc.network.sources[0][1]
        elif sc.gossip is not None and sc.gossip.sources:
            k = sc.gossip.sources[0][1]
        else:
            k = c.get("k")
    try:
        if kind == "coset":
            field = sc.field
            if "file" in c:
                code = coset.load_code(sc.base / c["file"])
                if code.field is not field:
                    raise ScenarioError(f"code file is over GF({code.field.q}), scenario uses GF({field.q})")
                return code
            if "generator" in c:
                G = np.array(c["generator"], dtype=np.int64).reshape(-1, int(k) if k else len(c["generator"][0]))
                return coset.construct_from_generator(G, field)
            w = int(_require(c, "w", "code"))
            found = coset.search_code(int(k), w, field, budget=int(c.get("budget", 1 << 16)), seed=sc.seed)
            if found is None:
                raise ScenarioError(f"no (k={k}, w={w}) code passing the column check over GF({field.q})")
            return found
        if kind == "codebook":
            return binning.load_codebook(sc.base / _require(c, "file", "code"))
        if kind == "binning":
            mode = c.get("mode", binning.INDIVIDUAL)
            args = dict(k=int(k), w=int(_require(c, "w", "code")), seed=int(c.get("seed", sc.seed)),
                        partition=bool(c.get("partition", False)))
            if mode == binning.INDIVIDUAL:
                return binning.generate_individual(epsilon=float(c.get("epsilon", 0.0)), **args)
            if mode == binning.STRONG:
                n = c.get("n")
                return binning.generate_strong(epsilon=float(_require(c, "epsilon", "code")),
                                               n=None if n is None else int(n), **args)
            raise ScenarioError(f"unknown binning mode {mode!r}")
    except ScenarioError:
        raise
    except (ValueError, OSError, TypeError) as exc:
        raise ScenarioError(f"code section: {exc}") from exc
    raise ScenarioError(f"unknown code type {kind!r}")
