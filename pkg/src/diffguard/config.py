"""Experiment configuration: defaults, YAML loading, CLI overrides.

The built-in defaults ARE the reference scenario (15 nodes in 3 clusters,
3 attacked nodes among 5 candidates). A config file only needs the keys it
wants to change; CLI flags override the file.
"""

import copy
from dataclasses import dataclass, field

import yaml

from .scenario import Topology, TopologyError, build_topology


class ConfigError(ValueError):
    pass


def _k5(nodes):
    return [[a, b] for i, a in enumerate(nodes) for b in nodes[i + 1:]]


def reference_edges() -> list:
    """Three dense clusters and four bridges; no bridge endpoint is an
    attack candidate, so candidate subsets stay a minority in every
    neighborhood."""
    c1 = _k5([1, 2, 3, 4, 5])
    c2 = [[a, b] for i, a in enumerate([6, 7, 8, 9, 10, 11])
          for b in [6, 7, 8, 9, 10, 11][i + 1:]
          if {a, b} not in ({6, 8}, {7, 9}, {10, 11})]
    c3 = [[12, 13], [13, 14], [14, 15], [12, 15]]
    bridges = [[5, 7], [11, 12], [1, 15], [4, 9]]
    return c1 + c2 + c3 + bridges


DEFAULTS = {
    "seed": 7,
    "runs": 200,
    "iters": 1000,
    "algo": "proposed",
    "ratio": 1.0,
    "attack": "fdi",
    "detect": True,
    "out": "out",
    "workers": 1,
    "topology": {
        "nodes": 15,
        "clusters": [[1, 2, 3, 4, 5], [6, 7, 8, 9, 10, 11], [12, 13, 14, 15]],
        "edges": reference_edges(),
    },
    "model": {
        "dim": 3,
        "base": [0.5, -0.4, 0.3],
        "similarity_radius": 0.5,
    },
    "signal": {
        "u_var_range": [0.8, 1.2],
        "z_var_range": [0.01, 0.04],
        "u_overrides": {},
        "z_overrides": {},
    },
    "algorithm": {
        "mu": 0.03,
        "eta": 0.02,
        "memory_len": 2,
        "cap": 0.4,
        "gamma": 50.0,
        "mem_weight": 0.9,
        "recv_weight": 0.4,
    },
    "attack_params": {
        "count": 3,
        "candidates": [2, 3, 6, 8, 13],
        "fdi_var": 3.0,
        "link_var": 0.5,
        "onset": 53,  # warm-up (memory_len + 1) plus 50, bootstrap stays clean
        "end": None,
    },
}


@dataclass
class ExperimentConfig:
    seed: int = 7
    runs: int = 200
    iters: int = 1000
    algo: str = "proposed"
    ratio: float = 1.0
    attack: str = "fdi"
    detect: bool = True
    out: str = "out"
    workers: int = 1
    nodes: int = 15
    clusters: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    dim: int = 3
    base: list = field(default_factory=lambda: [0.5, -0.4, 0.3])
    similarity_radius: float = 0.5
    u_var_range: list = field(default_factory=lambda: [0.8, 1.2])
    z_var_range: list = field(default_factory=lambda: [0.01, 0.04])
    u_overrides: dict = field(default_factory=dict)
    z_overrides: dict = field(default_factory=dict)
    mu: float = 0.03
    eta: float = 0.02
    memory_len: int = 2
    cap: float = 0.4
    gamma: float = 50.0
    mem_weight: float = 0.9
    recv_weight: float = 0.4
    num_attacked: int = 3
    candidates: list = field(default_factory=lambda: [2, 3, 6, 8, 13])
    fdi_var: float = 3.0
    link_var: float = 0.5
    onset: int = 53
    end: int | None = None


def _merge(base: dict, override: dict, path="") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict) and isinstance(val, dict):
            out[key] = _merge(base[key], val, path=f"{path}{key}.")
        else:
            out[key] = val
    return out


def _flatten(tree: dict) -> ExperimentConfig:
    return ExperimentConfig(
        seed=int(tree["seed"]), runs=int(tree["runs"]), iters=int(tree["iters"]),
        algo=str(tree["algo"]), ratio=float(tree["ratio"]),
        attack=str(tree["attack"]), detect=bool(tree["detect"]),
        out=str(tree["out"]), workers=int(tree["workers"]),
        nodes=int(tree["topology"]["nodes"]),
        clusters=tree["topology"]["clusters"],
        edges=tree["topology"]["edges"],
        dim=int(tree["model"]["dim"]),
        base=list(tree["model"]["base"]),
        similarity_radius=float(tree["model"]["similarity_radius"]),
        u_var_range=list(tree["signal"]["u_var_range"]),
        z_var_range=list(tree["signal"]["z_var_range"]),
        u_overrides=dict(tree["signal"]["u_overrides"] or {}),
        z_overrides=dict(tree["signal"]["z_overrides"] or {}),
        mu=float(tree["algorithm"]["mu"]),
        eta=float(tree["algorithm"]["eta"]),
        memory_len=int(tree["algorithm"]["memory_len"]),
        cap=float(tree["algorithm"]["cap"]),
        gamma=float(tree["algorithm"]["gamma"]),
        mem_weight=float(tree["algorithm"]["mem_weight"]),
        recv_weight=float(tree["algorithm"]["recv_weight"]),
        num_attacked=int(tree["attack_params"]["count"]),
        candidates=list(tree["attack_params"]["candidates"]),
        fdi_var=float(tree["attack_params"]["fdi_var"]),
        link_var=float(tree["attack_params"]["link_var"]),
        onset=int(tree["attack_params"]["onset"]),
        end=(None if tree["attack_params"]["end"] is None
             else int(tree["attack_params"]["end"])),
    )


def load_config(path=None, overrides=None) -> ExperimentConfig:
    """Defaults, then YAML file, then override mapping of top-level keys."""
    tree = copy.deepcopy(DEFAULTS)
    if path is not None:
        with open(path) as fh:
            loaded = yaml.safe_load(fh) or {}
        if not isinstance(loaded, dict):
            raise ConfigError("config file must contain a mapping")
        tree = _merge(tree, loaded)
    cfg = _flatten(tree)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if not hasattr(cfg, key):
            raise ConfigError(f"unknown override {key!r}")
        setattr(cfg, key, val)
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.runs < 1 or cfg.iters < 1:
        raise ConfigError("runs and iters must be at least 1")
    if not 0.0 < cfg.ratio <= 1.0:
        raise ConfigError("ratio must be in (0, 1]")
    if cfg.attack not in ("none", "fdi", "link", "both"):
        raise ConfigError(f"unknown attack kind {cfg.attack!r}")
    if cfg.algo not in ("proposed", "mdlms", "nclms"):
        raise ConfigError(f"unknown algorithm {cfg.algo!r}")
    if len(cfg.base) != cfg.dim:
        raise ConfigError("model.base length must equal model.dim")
    if cfg.attack != "none":
        if cfg.num_attacked > len(cfg.candidates):
            raise ConfigError("attack_params.count exceeds candidate pool")
        ids = set(range(1, cfg.nodes + 1))
        bad = [c for c in cfg.candidates if c not in ids]
        if bad:
            raise ConfigError(f"attack candidates not in topology: {bad}")
    if cfg.onset < 0:
        raise ConfigError("attack onset must be nonnegative")
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")


def build_config_topology(cfg: ExperimentConfig) -> Topology:
    try:
        return build_topology(cfg.nodes, cfg.edges, cfg.clusters)
    except TopologyError as exc:
        raise ConfigError(str(exc)) from exc
