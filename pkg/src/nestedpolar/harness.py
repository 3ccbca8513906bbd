"""Experiment orchestration: config, sweeps, CSV, persistence, verify.

All experiment randomness derives from the config seed through fixed
domain-separated offsets, so every CSV regenerates bit-identically.
Wall-clock timings go to stderr, never into output files.
"""

from __future__ import annotations

import io
import json
import sys
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from . import channel as channel_mod
from . import lossy as lossy_mod
from .construction import (NestedConstruction, delta_threshold, exact_params,
                           estimate_params, partition_by_subgroup)
from .dmc import (Dmc, JointSource, bec, bsc, channel_degradation_link,
                  channel_test_channels, conditional_capacity, degrade, dsbs,
                  identity_channel, joint_from_forward, minus_transform,
                  plus_transform, qsc, random_channel, reduce_outputs,
                  source_degradation_link, source_test_channels,
                  symmetric_capacity, useless_channel, z_d_all)
from .diagnostics import (exact_total_variation_channel,
                          exact_total_variation_source)
from .errors import ConfigError, ConstructionIOError
from .groups import FiniteAbelianGroup, Subgroup, group_from_spec
from .oracles import (binary_entropy, channel_capacity, hamming_distortion,
                      rate_distortion)
from .polar import (inverse_polar_transform, likelihood_table,
                    polar_transform, sc_conditional, synthesize_exact)

CSV_DIGITS = 12
RD_SCHEMA = "nestedpolar-csv rd-sweep v1"
BLER_SCHEMA = "nestedpolar-csv bler-sweep v1"
TRANSMIT_SCHEMA = "nestedpolar-csv transmit v1"

MODES = ("quantize", "transmit", "construct", "sweep-rd", "sweep-bler",
         "verify")


@dataclass
class ExperimentConfig:
    mode: str
    seed: int
    group: str = "Z2"
    source: str = "bss:0.5"
    test_channel: str = "bsc:0.11"
    channel: str = "bsc:0.11"
    px: str = "uniform"
    codec: str = "channel"
    n: tuple = (4,)
    beta: float = 0.25
    trials: int = 10000
    blocks: int = 100
    rate_cap: float | None = None
    out: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; pick from {MODES}")
        if self.codec not in ("source", "channel"):
            raise ConfigError(
                f"codec must be source or channel, got {self.codec!r}")
        if isinstance(self.n, (int, np.integer)):
            self.n = (int(self.n),)
        self.n = tuple(int(v) for v in self.n)
        if not self.n or any(v < 1 for v in self.n):
            raise ConfigError(f"n entries must be >= 1, got {self.n}")
        if not 0.0 < self.beta < 0.5:
            raise ConfigError(f"beta must be in (0, 1/2), got {self.beta}")
        if self.seed is None:
            raise ConfigError("seed is mandatory for reproducibility")
        self.seed = int(self.seed)


def load_config_file(path: str) -> dict:
    """JSON config mirroring the CLI flags (dashes become underscores)."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return {str(k).replace("-", "_"): v for k, v in raw.items()}


# ---- spec-string parsers ----

def parse_group(spec: str) -> FiniteAbelianGroup:
    try:
        return group_from_spec(spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_floats(text: str):
    try:
        return [float(tok) for tok in text.split(",") if tok != ""]
    except ValueError as exc:
        raise ConfigError(f"cannot parse number list {text!r}") from exc


def parse_source(spec: str) -> np.ndarray:
    """Source distribution: 'bss:p' (binary, P(1)=p) or 'pmf:p0,p1,...'."""
    kind, _, arg = spec.partition(":")
    if kind == "bss":
        p = float(arg) if arg else 0.5
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"bss parameter must be in [0,1], got {arg!r}")
        return np.array([1 - p, p])
    if kind == "pmf":
        p = np.array(_parse_floats(arg))
        if p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ConfigError(f"pmf must be a distribution, got {arg!r}")
        return p
    raise ConfigError(f"unknown source spec {spec!r} (offending token "
                      f"{kind!r})")


def parse_channel(spec: str, group: FiniteAbelianGroup) -> Dmc:
    """Channel and test-channel spec strings.

    bsc:p, bec:e, qsc:p (on ``group``), zchan:p, identity, useless:M,
    rows:a,b;c,d (explicit row-stochastic matrix on ``group``).
    """
    kind, _, arg = spec.partition(":")
    try:
        if kind == "bsc":
            return bsc(float(arg))
        if kind == "bec":
            return bec(float(arg))
        if kind == "qsc":
            return qsc(group, float(arg))
        if kind == "zchan":
            p = float(arg)
            return Dmc(FiniteAbelianGroup((2,)),
                       np.array([[1.0, 0.0], [p, 1.0 - p]]))
        if kind == "identity":
            return identity_channel(group)
        if kind == "useless":
            return useless_channel(group, int(arg) if arg else 1)
        if kind == "rows":
            rows = [_parse_floats(r) for r in arg.split(";")]
            return Dmc(group, np.array(rows), normalize=True)
    except (ValueError, ConfigError) as exc:
        raise ConfigError(f"bad channel spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown channel spec {spec!r} (offending token "
                      f"{kind!r})")


def parse_px(spec: str, W: Dmc) -> np.ndarray:
    """Input distribution: uniform, capacity (oracle-optimal), or pmf:..."""
    if spec == "uniform":
        return np.full(W.q, 1.0 / W.q)
    if spec == "capacity":
        return channel_capacity(W.probs)[1]
    kind, _, arg = spec.partition(":")
    if kind == "pmf":
        p = np.array(_parse_floats(arg))
        if len(p) != W.q or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ConfigError(f"pmf must be a length-{W.q} distribution")
        return p
    raise ConfigError(f"unknown px spec {spec!r} (offending token {kind!r})")


# ---- CSV ----

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.{CSV_DIGITS}g}"
    return str(value)


def write_csv(schema: str, header, rows, out=None) -> str:
    buf = io.StringIO()
    buf.write(f"# {schema}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    text = buf.getvalue()
    if out and out != "-":
        with open(out, "w") as fh:
            fh.write(text)
    return text


# ---- experiment runs ----

def _source_joint(cfg: ExperimentConfig):
    group = parse_group(cfg.group)
    p_x = parse_source(cfg.source)
    forward = parse_channel(cfg.test_channel, group)
    if forward.input_group.order != len(p_x):
        raise ConfigError("test channel input alphabet does not match source")
    if forward.output_size != group.order:
        raise ConfigError("test channel output must live on the "
                          f"reconstruction group {group.name}")
    return group, p_x, joint_from_forward(group, p_x, forward.probs)


RD_HEADER = ("n", "N", "blocks", "rate", "distortion", "d1_proxy", "d2_proxy",
             "d3_proxy", "mismatch_fraction", "oracle_rd")


def rd_rows(cfg: ExperimentConfig):
    """One row per n: quantize cfg.blocks random blocks; the last column is
    the oracle rate at the test channel's own distortion."""
    group, p_x, joint = _source_joint(cfg)
    dist = hamming_distortion(joint.x_size, group.order)
    d_test = float((joint.probs * dist).sum())
    oracle_r, _, _ = rate_distortion(p_x, dist, d_test)
    rows = []
    for n in cfg.n:
        t0 = time.perf_counter()
        code = lossy_mod.build_source_code(joint, n, beta=cfg.beta,
                                           trials=cfg.trials,
                                           seed=cfg.seed + n)
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 5, n)))
        x = rng.choice(joint.x_size, p=p_x, size=(cfg.blocks, 1 << n))
        diag = lossy_mod.diagnostics(code, x, distortion=dist,
                                     sample_seed=cfg.seed)
        rows.append((n, 1 << n, cfg.blocks, code.rate(), diag["D_avg"],
                     diag["D1_proxy"], diag["D2_proxy"], diag["D3_proxy"],
                     diag["mismatch_fraction"], oracle_r))
        print(f"rd n={n}: {time.perf_counter() - t0:.1f}s", file=sys.stderr)
    return rows


def run_rd_sweep(cfg: ExperimentConfig) -> str:
    return write_csv(RD_SCHEMA, RD_HEADER, rd_rows(cfg), cfg.out)


TRANSMIT_HEADER = ("n", "N", "gross_rate", "side_rate", "net_rate", "bler",
                   "p1_proxy", "trials")
BLER_HEADER = TRANSMIT_HEADER + ("oracle_capacity",)


def _channel_setup(cfg: ExperimentConfig):
    group = parse_group(cfg.group)
    W = parse_channel(cfg.channel, group)
    return W, parse_px(cfg.px, W)


def bler_rows(cfg: ExperimentConfig, with_oracle=True):
    W, p_x = _channel_setup(cfg)
    oracle_c = channel_capacity(W.probs)[0]
    rows = []
    for n in cfg.n:
        t0 = time.perf_counter()
        code = channel_mod.build_channel_code(p_x, W, n, beta=cfg.beta,
                                              trials=cfg.trials,
                                              seed=cfg.seed + n,
                                              rate_cap=cfg.rate_cap)
        diag = channel_mod.error_diagnostics(code, cfg.blocks, seed=cfg.seed)
        row = (n, 1 << n, code.gross_rate(), code.side_rate(),
               code.net_rate(), diag["bler"], diag["P1_proxy"], cfg.blocks)
        rows.append(row + (oracle_c,) if with_oracle else row)
        print(f"bler n={n}: {time.perf_counter() - t0:.1f}s", file=sys.stderr)
    return rows


def run_bler_sweep(cfg: ExperimentConfig) -> str:
    return write_csv(BLER_SCHEMA, BLER_HEADER, bler_rows(cfg), cfg.out)


def run_transmit(cfg: ExperimentConfig) -> str:
    return write_csv(TRANSMIT_SCHEMA, TRANSMIT_HEADER,
                     bler_rows(cfg, with_oracle=False), cfg.out)


def run_quantize(cfg: ExperimentConfig) -> str:
    return run_rd_sweep(cfg)


def run_construct(cfg: ExperimentConfig) -> str:
    """Build one construction (per cfg.codec) and persist it to cfg.out."""
    n = cfg.n[0]
    if cfg.codec == "source":
        _, _, joint = _source_joint(cfg)
        code = lossy_mod.build_source_code(joint, n, beta=cfg.beta,
                                           trials=cfg.trials, seed=cfg.seed)
    else:
        W, p_x = _channel_setup(cfg)
        code = channel_mod.build_channel_code(p_x, W, n, beta=cfg.beta,
                                              trials=cfg.trials,
                                              seed=cfg.seed,
                                              rate_cap=cfg.rate_cap)
    if cfg.out and cfg.out != "-":
        save_construction(cfg.out, code.construction)
    return code.construction.to_text() + "\n"


# ---- persistence ----

def save_construction(path: str, construction: NestedConstruction):
    with open(path, "w") as fh:
        fh.write(construction.to_text() + "\n")


def load_construction(path: str) -> NestedConstruction:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConstructionIOError(f"cannot read {path}: {exc}") from exc
    return NestedConstruction.from_text(text)


# ---- verify ----

@dataclass
class VerifyReport:
    results: list

    @property
    def ok(self) -> bool:
        return all(r["ok"] for r in self.results)

    def to_json(self) -> str:
        payload = {"schema": "nestedpolar-verify v1", "ok": self.ok,
                   "checks": self.results}
        return json.dumps(payload, indent=2)

    def text(self) -> str:
        lines = []
        for r in self.results:
            mark = "PASS" if r["ok"] else "FAIL"
            detail = f"  [{r['detail']}]" if r["detail"] else ""
            lines.append(f"{mark} {r['name']}{detail}")
        passed = sum(r["ok"] for r in self.results)
        lines.append(f"{passed}/{len(self.results)} checks passed")
        return "\n".join(lines)


def _expect(condition, message):
    if not condition:
        raise AssertionError(message)


def _group_roundtrip_ok(group, add_table) -> bool:
    """Does (a + b) - b recover a for every pair, using the given table?"""
    a = np.arange(group.order)[:, None]
    b = np.arange(group.order)[None, :]
    return bool(np.all(group.sub_table[add_table[a, b], b] == a))


def _check_group_arithmetic():
    for spec in ("Z4", "Z2xZ2", "Z6"):
        g = group_from_spec(spec)
        _expect(_group_roundtrip_ok(g, g.add_table), f"{spec} add/sub broken")
    return "Z4, Z2xZ2, Z6"


def _check_fault_injection():
    g = FiniteAbelianGroup((4,))
    bad = g.add_table.copy()
    bad[1, 2] = (bad[1, 2] + 1) % 4
    _expect(_group_roundtrip_ok(g, g.add_table), "clean table must pass")
    _expect(not _group_roundtrip_ok(g, bad),
            "corrupted add table went undetected")
    return "corrupted table copy detected"


def _check_subgroup_lattice():
    counts = {"Z4": 3, "Z2xZ2": 5, "Z8": 4, "Z6": 4}
    for spec, want in counts.items():
        g = group_from_spec(spec)
        subs = g.subgroups()
        _expect(len(subs) == want, f"{spec}: {len(subs)} subgroups != {want}")
        _expect(all(g.order % s.order == 0 for s in subs),
                f"{spec}: subgroup order does not divide group order")
    return "counts " + ", ".join(f"{k}={v}" for k, v in counts.items())


def _check_coset_decomposition():
    g = FiniteAbelianGroup((8,))
    K = Subgroup(g, (0, 4))
    H = Subgroup(g, (0, 2, 4, 6))
    k_of, m_of, t_of = g.decompose_tables(K, H)
    rebuilt = g.add_table[g.add_table[k_of, m_of], t_of]
    _expect(np.array_equal(rebuilt, np.arange(8)),
            "k + m + t does not rebuild the element")
    return "Z8 with K={0,4}, H={0,2,4,6}"


def _check_closed_form_capacities():
    cases = [
        (bsc(0.11), 1 - binary_entropy(0.11)),
        (bec(0.5), 0.5),
        (qsc(FiniteAbelianGroup((4,)), 0.2),
         2 + 0.8 * np.log2(0.8) + 0.2 * np.log2(0.2 / 3)),
    ]
    for W, want in cases:
        got = symmetric_capacity(W)
        _expect(abs(got - want) < 1e-12, f"{W}: {got} != {want}")
    return "bsc, bec, qsc"


def _check_capacity_conservation():
    rng = np.random.default_rng(7)
    worst = 0.0
    for spec in ("Z2", "Z4", "Z2xZ2"):
        g = group_from_spec(spec)
        for _ in range(10):
            W = random_channel(g, 5, rng)
            split = symmetric_capacity(minus_transform(W)) \
                + symmetric_capacity(plus_transform(W))
            worst = max(worst, abs(split - 2 * symmetric_capacity(W)))
    _expect(worst < 1e-9, f"conservation violated by {worst}")
    return f"30 random channels, max dev {worst:.2e}"


def _check_degradation_links():
    joint = dsbs(0.1)
    w_c, w_s = source_test_channels(joint)
    link = source_degradation_link(joint)
    _expect(np.allclose(degrade(w_s, link).probs, w_c.probs, atol=1e-15),
            "source pair: marginalization link mismatch")
    W = bsc(0.2)
    w_s2, w_c2 = channel_test_channels(np.array([0.7, 0.3]), W)
    link2 = channel_degradation_link(W)
    _expect(np.allclose(degrade(w_c2, link2).probs, w_s2.probs, atol=1e-15),
            "channel pair: marginalization link mismatch")
    return "source and channel pairs"


def _mutual_information(p_x, W_probs):
    joint = p_x[:, None] * W_probs
    p_y = joint.sum(axis=0)
    nz = joint > 0
    return float((joint[nz] * np.log2(
        joint[nz] / (p_x[:, None] * p_y[None, :])[nz])).sum())


def _check_rate_identities():
    rng = np.random.default_rng(11)
    g = FiniteAbelianGroup((4,))
    worst = 0.0
    for _ in range(10):
        joint = JointSource(g, rng.dirichlet(np.ones(4 * 3)).reshape(3, 4))
        w_c, w_s = source_test_channels(joint)
        gap = symmetric_capacity(w_s) - symmetric_capacity(w_c)
        worst = max(worst, abs(gap - joint.mutual_information()))
        W = random_channel(g, 5, rng)
        p_x = rng.dirichlet(np.ones(4))
        w_s2, w_c2 = channel_test_channels(p_x, W)
        gap2 = symmetric_capacity(w_c2) - symmetric_capacity(w_s2)
        worst = max(worst, abs(gap2 - _mutual_information(p_x, W.probs)))
    _expect(worst < 1e-9, f"rate identity violated by {worst}")
    return f"10 random pairs, max dev {worst:.2e}"


def _check_reduce_outputs():
    rng = np.random.default_rng(3)
    g = FiniteAbelianGroup((4,))
    W = random_channel(g, 9, rng)
    R = reduce_outputs(W)
    _expect(R.output_size <= W.output_size, "reduction grew the alphabet")
    _expect(abs(symmetric_capacity(R) - symmetric_capacity(W)) < 1e-10,
            "reduction changed capacity")
    _expect(np.allclose(z_d_all(R), z_d_all(W), atol=1e-10),
            "reduction changed distance parameters")
    return f"outputs {W.output_size} -> {R.output_size}"


def _check_conditional_capacity_chain():
    rng = np.random.default_rng(5)
    g = FiniteAbelianGroup((4,))
    W = random_channel(g, 6, rng)
    H = Subgroup(g, (0, 2))
    total = conditional_capacity(W, g.full_subgroup())
    _expect(abs(total - symmetric_capacity(W)) < 1e-12,
            "full subgroup != total capacity")
    coarse = total - conditional_capacity(W, H)
    _expect(-1e-12 <= coarse <= total + 1e-12,
            "coarse level out of range")
    _expect(abs(conditional_capacity(W, Subgroup(g, (0,)))) < 1e-12,
            "trivial subgroup must carry no information")
    return "chain rule over Z4"


def _check_transform_roundtrip():
    g = FiniteAbelianGroup((6,))
    rng = np.random.default_rng(2)
    v = rng.integers(0, 6, size=(3, 8))
    x = polar_transform(g, v)
    _expect(np.array_equal(inverse_polar_transform(g, x), v),
            "inverse transform failed")
    return "Z6, N=8"


def _check_exact_vs_sc():
    worst = 0.0
    for g, W in ((FiniteAbelianGroup((2,)), bsc(0.3)),
                 (FiniteAbelianGroup((4,)), qsc(FiniteAbelianGroup((4,)),
                                                0.2))):
        q, N = g.order, 4
        synth = synthesize_exact(W, 2)
        rng = np.random.default_rng(13)
        for _ in range(8):
            y = rng.integers(0, W.output_size, size=N)
            lik = likelihood_table(W, y[None])[0]
            digits = int(np.ravel_multi_index(y, (W.output_size,) * N))
            for i in range(N):
                for prefix_idx in range(q ** i):
                    prefix = [(prefix_idx // q ** (i - 1 - j)) % q
                              for j in range(i)]
                    cond = sc_conditional(g, lik, prefix, i)
                    ref = synth[i].probs[:, digits * q ** i + prefix_idx]
                    if ref.sum() == 0:
                        continue
                    worst = max(worst, float(
                        np.max(np.abs(cond - ref / ref.sum()))))
    _expect(worst < 1e-9, f"SC deviates from exact tables by {worst}")
    return f"Z2 and Z4 at N=4, max dev {worst:.2e}"


def _check_construction_partitions():
    joint = dsbs(0.11)
    w_c, w_s = source_test_channels(joint)
    pc, ps = exact_params(w_c, 2), exact_params(w_s, 2)
    delta = delta_threshold(4, 0.25)
    checks = ((partition_by_subgroup(pc, delta, "channel"), pc, delta),
              (partition_by_subgroup(ps, delta, "source"), ps, 1 - delta))
    for part, params, thr in checks:
        seen = []
        for H, idxs in part.items():
            seen.extend(idxs)
            for i in idxs:
                _expect(params.z_subgroup(H)[i] < thr,
                        f"index {i} misses its threshold")
                for Hp in params.group.subgroups():
                    if Hp.sort_key() < H.sort_key():
                        _expect(params.z_subgroup(Hp)[i] >= thr,
                                f"index {i} not minimal")
        _expect(sorted(seen) == list(range(4)), "partition not total")
    return "thresholds and minimality at n=2"


def _check_param_orderings():
    joint = dsbs(0.1)
    w_c, w_s = source_test_channels(joint)
    pc, ps = exact_params(w_c, 2), exact_params(w_s, 2)
    _expect(np.all(pc.z_d[:, 1:] >= ps.z_d[:, 1:] - 1e-12),
            "source pair: Z(W_c) < Z(W_s) somewhere")
    W = bsc(0.2)
    w_s2, w_c2 = channel_test_channels(np.array([0.5, 0.5]), W)
    ps2, pc2 = exact_params(w_s2, 2), exact_params(w_c2, 2)
    _expect(np.all(ps2.z_d[:, 1:] >= pc2.z_d[:, 1:] - 1e-12),
            "channel pair: Z(W_s) < Z(W_c) somewhere")
    return "both degradation orderings at n=2"


def _check_estimator_extremes():
    g = FiniteAbelianGroup((4,))
    ident = estimate_params(identity_channel(g), 2, trials=256, seed=0)
    _expect(np.max(ident.z_d[:, 1:]) < 1e-12, "identity: Z not 0")
    _expect(np.min(ident.capacity) > 2 - 1e-9, "identity: capacity not 2")
    none = estimate_params(useless_channel(g), 2, trials=256, seed=0)
    _expect(np.min(none.z_d[:, 1:]) > 1 - 1e-12, "useless: Z not 1")
    _expect(np.max(np.abs(none.capacity)) < 1e-9, "useless: capacity not 0")
    return "identity and useless channels"


def _tiny_source_code(n=2, identity_joint=False):
    if identity_joint:
        g = FiniteAbelianGroup((2,))
        joint = joint_from_forward(g, np.array([0.5, 0.5]), np.eye(2))
    else:
        joint = dsbs(0.11)
    return lossy_mod.build_source_code(joint, n, seed=1)


def _tiny_channel_code(n=2, W=None, p_x=None, **kw):
    W = W if W is not None else bsc(0.2)
    p_x = p_x if p_x is not None else np.full(W.q, 1.0 / W.q)
    return channel_mod.build_channel_code(p_x, W, n, seed=1, **kw)


def _check_serialization():
    con = _tiny_channel_code().construction
    clone = NestedConstruction.from_text(con.to_text())
    _expect(clone == con, "text round trip changed the construction")
    _expect(clone.content_hash() == con.content_hash(), "hash drifted")
    try:
        NestedConstruction.from_text(con.to_text()[:40])
        raise AssertionError("truncated text accepted")
    except ConstructionIOError:
        pass
    payload = json.loads(con.to_text())
    payload["version"] = 999
    try:
        NestedConstruction.from_dict(payload)
        raise AssertionError("future version accepted")
    except ConstructionIOError:
        pass
    return "round trip; truncation and version rejected"


def _check_lossless_identity():
    code = _tiny_source_code(n=3, identity_joint=True)
    _expect(abs(code.rate() - 1.0) < 1e-12, f"rate {code.rate()} != 1")
    rng = np.random.default_rng(0)
    x = rng.integers(0, 2, size=(4, 8))
    msg, _ = lossy_mod.encode(code, x)
    u = lossy_mod.decode(code, msg)
    _expect(np.array_equal(u, x), "identity joint did not reconstruct x")
    return "rate 1, exact reconstruction"


def _check_message_agreement():
    code = _tiny_source_code(n=4)
    rng = np.random.default_rng(1)
    x = rng.integers(0, 2, size=(6, 16))
    msg, v = lossy_mod.encode(code, x)
    _, v_hat = lossy_mod.decode(code, msg, return_v=True)
    cells = list(code.message_cells)
    _expect(np.array_equal(v_hat[:, cells], v[:, cells]),
            "decoder disagreed with encoder on message cells")
    _expect(abs(msg.bit_length() - 16 * code.rate()) < 1e-9,
            "message bits disagree with the code rate")
    clone = lossy_mod.QuantizedMessage.unpack(msg.construction_hash,
                                              msg.radixes, msg.pack())
    _expect(np.array_equal(clone.digits, msg.digits), "pack round trip")
    return "message cells agree; bits = N*rate; pack round trip"


def _check_hash_mismatch():
    a = _tiny_source_code(n=2)
    b = _tiny_source_code(n=2, identity_joint=True)
    rng = np.random.default_rng(2)
    msg, _ = lossy_mod.encode(a, rng.integers(0, 2, size=(2, 4)))
    try:
        lossy_mod.decode(b, msg)
        raise AssertionError("foreign message accepted")
    except ConstructionIOError:
        return "foreign message rejected"


def _check_codec_determinism():
    code = _tiny_source_code(n=3)
    rng = np.random.default_rng(3)
    x = rng.integers(0, 2, size=(3, 8))
    m1, v1 = lossy_mod.encode(code, x, sample_seed=9)
    m2, v2 = lossy_mod.encode(code, x, sample_seed=9)
    _expect(np.array_equal(m1.digits, m2.digits) and np.array_equal(v1, v2),
            "encode is not deterministic under a fixed seed")
    ch = _tiny_channel_code(n=3)
    r1 = channel_mod.transmit_blocks(ch, 4, seed=5)
    r2 = channel_mod.transmit_blocks(ch, 4, seed=5)
    _expect(np.array_equal(r1["x"], r2["x"])
            and np.array_equal(r1["decoded"], r2["decoded"]),
            "transmit is not deterministic under a fixed seed")
    return "encode and transmit reproduce exactly"


def _check_noiseless_roundtrip():
    g = FiniteAbelianGroup((4,))
    code = _tiny_channel_code(n=2, W=identity_channel(g),
                              p_x=np.full(4, 0.25))
    run = channel_mod.transmit_blocks(code, 8, seed=0)
    _expect(run["bler"] == 0.0, f"noiseless BLER {run['bler']}")
    _expect(abs(code.gross_rate() - 2.0) < 1e-12, "noiseless rate != 2 bits")
    return "Z4 identity channel, 8 blocks, BLER 0"


def _check_rate_accounting():
    code = _tiny_channel_code(n=4)
    _expect(abs(code.net_rate() - (code.gross_rate() - code.side_rate()))
            < 1e-15, "net != gross - side")
    _expect(code.side_rate() >= 0 and code.gross_rate() >= 0, "negative rate")
    msg = channel_mod.random_messages(code, 3, seed=0)
    x, side, _ = channel_mod.channel_encode(code, msg)
    _expect(x.shape == (3, 16), "wrong codeword shape")
    _expect(abs(side.bit_length() - 16 * code.side_rate()) < 1e-9,
            "side-info bits disagree with side rate")
    return "net = gross - side; side bits match"


def _check_rate_cap():
    code = _tiny_channel_code(n=5, W=bsc(0.11), rate_cap=0.25)
    _expect(code.net_rate() <= 0.25 + 1e-12,
            f"net rate {code.net_rate()} above cap")
    _expect(code.construction.metadata.get("rate_cap") == 0.25,
            "cap not recorded in metadata")
    return f"net rate {code.net_rate():.4f} <= 0.25"


def _check_shaping_marginal():
    # uniform input: dither symmetry makes the codeword marginal exact
    uni = _tiny_channel_code(n=6, W=bsc(0.11))
    msg = channel_mod.random_messages(uni, 128, seed=4)
    x, _, _ = channel_mod.channel_encode(uni, msg)
    freq = np.bincount(x.reshape(-1), minlength=2) / x.size
    sigma = np.sqrt(0.25 / x.size)
    dev = float(np.max(np.abs(freq - 0.5)) / sigma)
    _expect(dev <= 3.0, f"uniform marginal off by {dev:.2f} sigma")
    # shaped input at this small n: residual bias is expected, but the
    # marginal must sit far closer to p_x than to uniform (full 3-sigma
    # agreement is an n=10 acceptance check)
    p_x = np.array([0.7, 0.3])
    code = _tiny_channel_code(n=6, W=bsc(0.2), p_x=p_x)
    msg = channel_mod.random_messages(code, 128, seed=4)
    x, _, _ = channel_mod.channel_encode(code, msg)
    shaped = np.bincount(x.reshape(-1), minlength=2) / x.size
    _expect(abs(shaped[0] - 0.7) < 0.06, f"shaped marginal {shaped[0]:.3f}")
    _expect(shaped[0] > 0.6, "shaping pulled the marginal the wrong way")
    return (f"uniform dev {dev:.2f} sigma; shaped P(0) {shaped[0]:.3f} "
            f"vs target 0.7")


def _check_tv_fully_sampled():
    code = _tiny_source_code(n=2, identity_joint=True)
    tv = exact_total_variation_source(code)
    _expect(tv == 0.0, f"fully sampled TV {tv} != 0")
    return "TV exactly 0 with no frozen cells"


def _check_tv_decreasing():
    tvs = [exact_total_variation_source(_tiny_source_code(n=n))
           for n in (2, 3)]
    _expect(0 <= tvs[1] < tvs[0], f"source TV trend broken: {tvs}")
    ch = [exact_total_variation_channel(
        _tiny_channel_code(n=n, W=bsc(0.2), p_x=np.array([0.7, 0.3])))
        for n in (2, 3)]
    _expect(0 <= ch[1] < ch[0], f"channel TV trend broken: {ch}")
    return (f"source {tvs[0]:.3f}->{tvs[1]:.3f}, "
            f"channel {ch[0]:.3f}->{ch[1]:.3f}")


def _check_oracle_closed_forms():
    c_bsc = channel_capacity(bsc(0.11).probs)[0]
    _expect(abs(c_bsc - (1 - binary_entropy(0.11))) < 1e-6, "BSC capacity")
    c_bec = channel_capacity(bec(0.5).probs)[0]
    _expect(abs(c_bec - 0.5) < 1e-6, "BEC capacity")
    c_z, p_z = channel_capacity(np.array([[1.0, 0.0], [0.5, 0.5]]))
    _expect(abs(c_z - np.log2(1.25)) < 1e-6, "Z channel capacity")
    _expect(np.max(np.abs(p_z - np.array([0.6, 0.4]))) < 1e-4,
            "Z channel optimal input")
    d = hamming_distortion(2)
    r, _, _ = rate_distortion(np.array([0.5, 0.5]), d, 0.11)
    _expect(abs(r - (1 - binary_entropy(0.11))) < 1e-6, "R(0.11)")
    r0, _, _ = rate_distortion(np.array([0.5, 0.5]), d, 0.5)
    _expect(abs(r0) < 1e-9, "R(0.5) != 0")
    r1, _, _ = rate_distortion(np.array([0.5, 0.5]), d, 0.0)
    _expect(abs(r1 - 1.0) < 1e-6, "R(0) != 1")
    return "capacity and R(D) match closed forms"


def _check_csv_determinism():
    cfg = ExperimentConfig(mode="sweep-rd", seed=123, n=(2, 3),
                           trials=400, blocks=8)
    _expect(run_rd_sweep(cfg) == run_rd_sweep(cfg), "rd CSV not bit-stable")
    cfg2 = ExperimentConfig(mode="sweep-bler", seed=321, n=(2, 3),
                            trials=400, blocks=8, channel="bsc:0.05")
    _expect(run_bler_sweep(cfg2) == run_bler_sweep(cfg2),
            "bler CSV not bit-stable")
    return "rd and bler sweeps bit-identical on rerun"


def _check_construction_file_io():
    con = _tiny_channel_code().construction
    with tempfile.NamedTemporaryFile("w", suffix=".json",
                                     delete=False) as fh:
        path = fh.name
    save_construction(path, con)
    _expect(load_construction(path) == con,
            "file round trip changed the construction")
    with open(path) as fh:
        text = fh.read()
    with open(path, "w") as fh:
        fh.write(text[: len(text) // 2])
    try:
        load_construction(path)
        raise AssertionError("truncated file accepted")
    except ConstructionIOError:
        pass
    return "save/load round trip; truncation rejected"


VERIFY_CHECKS = (
    ("group-add-sub-roundtrip", _check_group_arithmetic),
    ("group-fault-injection", _check_fault_injection),
    ("group-subgroup-lattice", _check_subgroup_lattice),
    ("group-coset-decomposition", _check_coset_decomposition),
    ("dmc-closed-form-capacities", _check_closed_form_capacities),
    ("dmc-capacity-conservation", _check_capacity_conservation),
    ("dmc-degradation-links", _check_degradation_links),
    ("dmc-rate-identities", _check_rate_identities),
    ("dmc-reduce-outputs", _check_reduce_outputs),
    ("dmc-conditional-capacity", _check_conditional_capacity_chain),
    ("polar-transform-roundtrip", _check_transform_roundtrip),
    ("polar-exact-vs-sc", _check_exact_vs_sc),
    ("construction-thresholds", _check_construction_partitions),
    ("construction-param-ordering", _check_param_orderings),
    ("construction-estimator-extremes", _check_estimator_extremes),
    ("construction-serialization", _check_serialization),
    ("lossy-identity-roundtrip", _check_lossless_identity),
    ("lossy-message-agreement", _check_message_agreement),
    ("lossy-hash-mismatch", _check_hash_mismatch),
    ("codec-determinism", _check_codec_determinism),
    ("channel-noiseless-roundtrip", _check_noiseless_roundtrip),
    ("channel-rate-accounting", _check_rate_accounting),
    ("channel-rate-cap", _check_rate_cap),
    ("channel-shaping-marginal", _check_shaping_marginal),
    ("diagnostics-tv-fully-sampled", _check_tv_fully_sampled),
    ("diagnostics-tv-decreasing", _check_tv_decreasing),
    ("oracle-closed-forms", _check_oracle_closed_forms),
    ("harness-csv-determinism", _check_csv_determinism),
    ("harness-construction-file-io", _check_construction_file_io),
)


def verify(cfg: ExperimentConfig | None = None) -> VerifyReport:
    """Run the whole invariant registry; the report is machine readable."""
    results = []
    for name, fn in VERIFY_CHECKS:
        t0 = time.perf_counter()
        try:
            detail = fn() or ""
            ok = True
        except Exception as exc:  # noqa: BLE001 - report, do not abort
            detail = f"{type(exc).__name__}: {exc}"
            ok = False
        results.append({"name": name, "ok": ok, "detail": detail,
                        "seconds": round(time.perf_counter() - t0, 3)})
    return VerifyReport(results)


def run_experiment(cfg: ExperimentConfig):
    """Dispatch one config; returns (output text, exit code)."""
    if cfg.mode in ("quantize", "sweep-rd"):
        return run_rd_sweep(cfg), 0
    if cfg.mode == "transmit":
        return run_transmit(cfg), 0
    if cfg.mode == "sweep-bler":
        return run_bler_sweep(cfg), 0
    if cfg.mode == "construct":
        return run_construct(cfg), 0
    report = verify(cfg)
    text = report.text() + "\n"
    if cfg.out and cfg.out != "-":
        with open(cfg.out, "w") as fh:
            fh.write(report.to_json() + "\n")
    return text, 0 if report.ok else 1
