"""Tunable constants of the five-phase strategy.

Every threshold is computed from a few knobs (factor, exponent) evaluated at
the instance size ``n``. Defaults reproduce the asymptotic formulas; at the
sizes that fit on a desk several of them are degenerate, which is why tuned
profiles live in ``configs/``.

Any derived quantity can also be pinned directly with an override, e.g.
``ParamSet(n, overrides={"q": 0.3})``.
"""

import math
from dataclasses import asdict, dataclass, field, fields

from .errors import ParameterError


@dataclass
class ParamSet:
    n: int
    c_slack: float = 10.0
    # Phase I
    q_factor: float = 1.0
    q_exp: float = 0.5
    k_factor: float = 1.0
    k_exp: float = 0.45
    # Phase II
    qp_factor: float = 6.0
    qp_exp: float = 0.15
    f_deg_lo: float = 2.0 / 3.0
    f_deg_hi: float = 4.0 / 3.0
    t0_factor: float = 1.0 / 3.0
    absorb_threshold: int = 3
    tf_ratio: float = 2.0
    t0_cap_factor: float = 1.0
    block_size: int = 100
    small_factor: float = 1.0
    small_exp: float = 0.5
    tiny_exp: float = 0.04
    # Phases III-IV
    exp_deg_exp: float = 0.4
    bad3_factor: float = 3.0
    bad4_factor: float = 2.0
    core_deg_factor: float = 1.0
    core_size_factor: float = 1.0 / 240.0
    expansion_factor: float = 1.0 / 6000.0
    diam_factor: float = 2.0
    jb_factor: float = 1000.0
    jb_exp: float = 0.45
    lazy_ports: bool = False
    # Phase V
    component_cap: int = 24000
    connect_mode: str = "chain"
    boost_min_degree: int = 0
    port_deg_factor: float = 2.0 / 3.0
    port_attempts: int = 20
    rotation_cap: int = 4000
    booster_round_cap: int = 100000
    exact_cap: int = 12
    # coupling and event checks
    p_cap_factor: float = 10.0
    max_deg_factor: float = 40.0
    check_events: bool = True
    # two-phase strategy
    inout_k: int = 100
    eps_exp: float = 1.0 / 3.0
    m_factor: float = 1.0
    dh_exact_cap: int = 30
    dh_restarts: int = 40
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n}")
        for k in self.overrides:
            if k not in DERIVED:
                raise ParameterError(f"unknown derived parameter {k!r}")

    @property
    def ln(self) -> float:
        return math.log(max(self.n, 3))

    def _get(self, name, value):
        return self.overrides.get(name, value)

    # -- Phase I --
    @property
    def q(self) -> float:
        return min(1.0, self._get("q", self.q_factor * self.ln ** -self.q_exp))

    @property
    def k_interval(self) -> int:
        return int(self._get("k_interval", math.floor(self.k_factor * self.n * self.ln ** -self.k_exp)))

    # -- Phase II --
    @property
    def q_prime(self) -> float:
        return min(1.0, self._get("q_prime", self.qp_factor * self.ln ** -self.qp_exp))

    @property
    def t0_cap(self) -> float:
        return self._get("t0_cap", self.t0_cap_factor * self.n * math.exp(-self.ln ** 0.4))

    @property
    def small_threshold(self) -> float:
        return self._get("small_threshold", self.small_factor * self.ln ** self.small_exp)

    @property
    def tiny_cap(self) -> float:
        return self._get("tiny_cap", self.n ** self.tiny_exp)

    # -- Phases III/IV --
    @property
    def bad_threshold_p3(self) -> float:
        return self._get("bad_threshold_p3", self.bad3_factor * self.ln ** self.exp_deg_exp)

    @property
    def bad_threshold_p4(self) -> float:
        return self._get("bad_threshold_p4", self.bad4_factor * self.ln ** self.exp_deg_exp)

    @property
    def core_degree(self) -> int:
        return int(math.ceil(self._get("core_degree", self.core_deg_factor * self.ln ** self.exp_deg_exp)))

    @property
    def core_size(self) -> float:
        return self._get("core_size", self.core_size_factor * self.n * self.ln ** -self.k_exp)

    @property
    def expansion_set(self) -> float:
        return self._get("expansion_set", self.expansion_factor * self.n * self.ln ** -self.k_exp)

    @property
    def diam_bound(self) -> float:
        return self._get("diam_bound", self.diam_factor * self.ln)

    @property
    def j_block_size(self) -> int:
        return int(math.ceil(self._get("j_block_size", self.jb_factor * self.ln ** self.jb_exp)))

    # -- coupling / events --
    @property
    def p_cap(self) -> float:
        return min(1.0, self._get("p_cap", self.p_cap_factor * self.ln / self.n))

    @property
    def max_red_degree(self) -> float:
        return self._get("max_red_degree", self.max_deg_factor * self.ln)

    def threshold_p(self, c: float | None = None) -> float:
        """(ln n + ln ln n + c) / n, clipped to [0, 1]."""
        c = self.c_slack if c is None else c
        ln = self.ln
        return min(1.0, max(0.0, (ln + math.log(ln) + c) / self.n))

    def summary(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "overrides"}
        for name in DERIVED:
            out[name] = getattr(self, name)
        return out

    def with_updates(self, **kw) -> "ParamSet":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        ov = dict(d.pop("overrides"))
        for k, v in kw.items():
            if k in DERIVED:
                ov[k] = v
            elif k in d:
                d[k] = v
            else:
                raise ParameterError(f"unknown parameter {k!r}")
        return ParamSet(overrides=ov, **d)

    @classmethod
    def from_mapping(cls, n: int, mapping: dict) -> "ParamSet":
        """Build from string key/values (config files, CLI ``--param``)."""
        base = cls(n)
        typed = {}
        knob_types = {f.name: f.type for f in fields(cls)}
        for k, raw in mapping.items():
            if k in DERIVED:
                typed[k] = float(raw)
            elif k in knob_types and k not in ("n", "overrides"):
                typed[k] = _coerce(raw, getattr(base, k))
            else:
                raise ParameterError(f"unknown parameter {k!r}")
        return base.with_updates(**typed)


DERIVED = ("q", "k_interval", "q_prime", "t0_cap", "small_threshold", "tiny_cap",
           "bad_threshold_p3", "bad_threshold_p4", "core_degree", "core_size",
           "expansion_set", "diam_bound", "j_block_size", "p_cap", "max_red_degree")


def _coerce(raw, like):
    if not isinstance(raw, str):
        return type(like)(raw)
    if isinstance(like, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ParameterError(f"not a boolean: {raw!r}")
    if isinstance(like, int):
        return int(float(raw))
    if isinstance(like, float):
        return float(raw)
    return raw
