"""Plain-text experiment configs.

Grammar (INI, ``#`` or ``;`` comments)::

    [system]
    lambda = 100                          # arrival rate, requests/s
    negative_cycle_policy = repeat-backoff  # or: error
    max_cycles = 1000

    [node 1]                              # one section per node, numbered from 1
    alpha = 5                             # growth rate, requests/s^2
    beta = 0.5                            # backoff factor in (0, 1)
    u0 = 0                                # initial admission rate (default 0)
    w0 = 7.5                              # initial node queue (default 0)

Node sections are ordered by their number; numbering must be contiguous.
"""
from __future__ import annotations

import configparser
import hashlib
import re
from pathlib import Path

from .model import ConfigError, NodeParams, SystemConfig

_NODE = re.compile(r"^node\s+(\d+)$")


def parse_config(text: str) -> SystemConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"malformed config: {exc}"]) from exc
    problems = []
    if not cp.has_section("system"):
        raise ConfigError(["missing [system] section"])
    sysec = cp["system"]
    unknown = set(sysec) - {"lambda", "negative_cycle_policy", "max_cycles"}
    problems += [f"[system]: unknown key {key!r}" for key in sorted(unknown)]
    try:
        lam = sysec.getfloat("lambda")
        max_cycles = sysec.getint("max_cycles", fallback=1000)
    except ValueError as exc:
        raise ConfigError([f"[system]: {exc}"]) from exc
    if lam is None:
        problems.append("[system]: lambda is required")
    policy = sysec.get("negative_cycle_policy", fallback="repeat-backoff")
    if policy not in ("error", "repeat-backoff"):
        problems.append(f"[system]: negative_cycle_policy must be error or repeat-backoff, got {policy!r}")

    numbered = {}
    for name in cp.sections():
        if name == "system":
            continue
        m = _NODE.match(name)
        if not m:
            problems.append(f"unknown section [{name}]")
            continue
        numbered[int(m.group(1))] = cp[name]
    if sorted(numbered) != list(range(1, len(numbered) + 1)):
        problems.append(f"node sections must be numbered 1..n, got {sorted(numbered)}")
    nodes = []
    for idx in sorted(numbered):
        sec = numbered[idx]
        unknown = set(sec) - {"alpha", "beta", "u0", "w0"}
        problems += [f"[node {idx}]: unknown key {key!r}" for key in sorted(unknown)]
        try:
            alpha = sec.getfloat("alpha")
            beta = sec.getfloat("beta")
            u0 = sec.getfloat("u0", fallback=0.0)
            w0 = sec.getfloat("w0", fallback=0.0)
        except ValueError as exc:
            problems.append(f"[node {idx}]: {exc}")
            continue
        if alpha is None or beta is None:
            problems.append(f"[node {idx}]: alpha and beta are required")
            continue
        nodes.append(NodeParams(alpha, beta, u0, w0))
    if problems:
        raise ConfigError(problems)
    return SystemConfig(lam, tuple(nodes), policy, max_cycles)


def load_config(path: str | Path) -> SystemConfig:
    """Read a config file; a bare name such as ``table1.cfg`` also resolves to the bundled copy."""
    if not Path(path).exists() and bundled_config(str(path)).is_file():
        path = bundled_config(str(path))
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from exc
    return parse_config(text)


def dumps_config(cfg: SystemConfig) -> str:
    """Canonical text form; parsing it back yields an equal config."""
    lines = [
        "[system]",
        f"lambda = {cfg.lam!r}",
        f"negative_cycle_policy = {cfg.negative_cycle_policy.value}",
        f"max_cycles = {cfg.max_cycles}",
    ]
    for i, p in enumerate(cfg.nodes, start=1):
        lines += ["", f"[node {i}]", f"alpha = {p.alpha!r}", f"beta = {p.beta!r}", f"u0 = {p.u0!r}", f"w0 = {p.w0!r}"]
    return "\n".join(lines) + "\n"


def config_hash(cfg: SystemConfig) -> str:
    return hashlib.sha256(dumps_config(cfg).encode()).hexdigest()


def config_dict(cfg: SystemConfig) -> dict:
    return {
        "lambda": cfg.lam,
        "negative_cycle_policy": cfg.negative_cycle_policy.value,
        "max_cycles": cfg.max_cycles,
        "nodes": [
            {"alpha": p.alpha, "beta": p.beta, "u0": p.u0, "w0": p.w0} for p in cfg.nodes
        ],
    }


def bundled_config(name: str = "table1.cfg") -> Path:
    return Path(__file__).parent / "data" / name
