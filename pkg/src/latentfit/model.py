"""Latent-variable model specifications.

Two text formats parse into the same :class:`SemModel`:

* RAM arrow format, one path per line::

      F1 -> Q1, lam1, NA      # free loading labelled lam1
      F1 <-> F1, NA, 1        # variance fixed at 1
      F1 -> F2, b12, 0.3      # free, start value 0.3

* measurement format, one latent per line::

      FACTOR1 =~ Q1 + Q2 + Q3
"""
import json
import re
from dataclasses import asdict, dataclass, field

DIRECTED = "->"
COVARIANCE = "<->"
INTERCEPT = "~1"
CONSTANT = "1"

_NAME = r"[A-Za-z_][A-Za-z0-9_]*"
_NAME_RE = re.compile(rf"^{_NAME}$")
_PATH_RE = re.compile(rf"^\s*({_NAME}|1)\s*(<->|->)\s*({_NAME})\s*$")
_NUM_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


class ModelSyntaxError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class PathSpec:
    kind: str
    tail: str
    head: str
    label: str = None
    fixed_value: float = None
    start_value: float = None

    @property
    def free(self):
        return self.fixed_value is None

    def key(self):
        if self.kind == COVARIANCE:
            return (self.kind,) + tuple(sorted((self.tail, self.head)))
        return (self.kind, self.tail, self.head)


@dataclass(frozen=True)
class SemModel:
    observed: tuple
    latents: tuple
    params: tuple
    meanstructure: bool = False
    _free: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        known = set(self.observed) | set(self.latents)
        if set(self.observed) & set(self.latents):
            raise ModelSyntaxError(f"names both observed and latent: {sorted(set(self.observed) & set(self.latents))}")
        seen, labels = set(), set()
        for ps in self.params:
            for nm in (ps.tail, ps.head):
                if nm not in known and not (ps.kind == INTERCEPT and nm == CONSTANT):
                    raise ModelSyntaxError(f"undeclared variable {nm!r}")
            if ps.key() in seen:
                raise ModelSyntaxError(f"duplicate path {ps.tail} {ps.kind} {ps.head}")
            seen.add(ps.key())
            if (ps.label is None) == (ps.fixed_value is None):
                raise ModelSyntaxError(f"path {ps.tail} {ps.kind} {ps.head} needs exactly one of label/fixed value")
            if ps.label is not None:
                if ps.label in labels:
                    raise ModelSyntaxError(f"label {ps.label!r} used twice (equality constraints unsupported)")
                labels.add(ps.label)
        object.__setattr__(self, "_free", tuple(ps for ps in self.params if ps.free))

    @property
    def free_params(self):
        return self._free

    @property
    def n_free(self):
        return len(self._free)

    @property
    def n_fixed(self):
        return len(self.params) - len(self._free)

    @property
    def moments(self):
        p = len(self.observed)
        return p * (p + 1) // 2 + (p if self.meanstructure else 0)

    @property
    def df(self):
        return self.moments - self.n_free

    def to_dict(self):
        return {
            "observed": list(self.observed),
            "latents": list(self.latents),
            "meanstructure": self.meanstructure,
            "params": [
                {k: v for k, v in asdict(ps).items()} for ps in self.params
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d):
        return cls(
            observed=tuple(d["observed"]),
            latents=tuple(d["latents"]),
            params=tuple(PathSpec(**p) for p in d["params"]),
            meanstructure=bool(d["meanstructure"]),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _strip_comment(line):
    return line.split("#", 1)[0].strip()


def _ordered_unique(seq):
    return tuple(dict.fromkeys(seq))


def parse_ram(text, observed=None):
    """Parse RAM arrow text (``TAIL ARROW HEAD, LABEL|NA, VALUE|NA`` per line).

    Latent variables are the names that emit a directed path, unless an
    explicit ``observed`` list (e.g. data column names) is given, in which
    case every other name is latent. ``1 -> X`` declares an intercept and
    turns the mean structure on.
    """
    paths = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 3:
            raise ModelSyntaxError(f"expected 'TAIL ARROW HEAD, LABEL, VALUE', got {raw.strip()!r}", lineno)
        m = _PATH_RE.match(fields[0])
        if not m:
            raise ModelSyntaxError(f"malformed path {fields[0]!r}", lineno)
        tail, arrow, head = m.groups()
        label, value = fields[1], fields[2]
        if label == "NA":
            label = None
        elif not _NAME_RE.match(label):
            raise ModelSyntaxError(f"bad parameter label {label!r}", lineno)
        if value == "NA":
            value = None
        elif _NUM_RE.match(value):
            value = float(value)
        else:
            raise ModelSyntaxError(f"bad value {value!r}", lineno)
        if label is None and value is None:
            raise ModelSyntaxError("label and value are both NA", lineno)
        if tail == CONSTANT:
            if arrow != DIRECTED:
                raise ModelSyntaxError("intercepts use '1 -> NAME'", lineno)
            kind = INTERCEPT
        else:
            kind = arrow
        ps = PathSpec(
            kind=kind, tail=tail, head=head, label=label,
            fixed_value=value if label is None else None,
            start_value=value if label is not None else None,
        )
        if any(q.key() == ps.key() for q, _ in paths):
            raise ModelSyntaxError(f"duplicate path {tail} {arrow} {head}", lineno)
        if label is not None and any(q.label == label for q, _ in paths):
            raise ModelSyntaxError(f"label {label!r} used twice (equality constraints unsupported)", lineno)
        paths.append((ps, lineno))

    if not paths:
        raise ModelSyntaxError("model text has no paths")
    names = _ordered_unique(
        nm for ps, _ in paths for nm in (ps.tail, ps.head) if nm != CONSTANT
    )
    if observed is not None:
        obs_set = set(observed)
        latent_set = {nm for nm in names if nm not in obs_set}
    else:
        latent_set = {ps.tail for ps, _ in paths if ps.kind == DIRECTED}
    for ps, lineno in paths:
        if ps.kind == INTERCEPT and ps.head in latent_set:
            raise ModelSyntaxError(f"intercept on latent {ps.head!r} not supported", lineno)
    return SemModel(
        observed=tuple(nm for nm in names if nm not in latent_set),
        latents=tuple(nm for nm in names if nm in latent_set),
        params=tuple(ps for ps, _ in paths),
        meanstructure=any(ps.kind == INTERCEPT for ps, _ in paths),
    )


def parse_measurement(text, std_lv=False, meanstructure=False):
    """Parse ``LATENT =~ item + item`` lines into a confirmatory factor model.

    ``std_lv`` fixes every latent variance at 1 and frees all loadings;
    otherwise each latent's first loading is fixed at 1 and its variance is
    free. Error variances and all latent covariances are free; the mean
    structure adds a free intercept per observed variable.
    """
    blocks = []
    owner = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        if line.count("=~") != 1:
            raise ModelSyntaxError(f"expected 'LATENT =~ item + item', got {raw.strip()!r}", lineno)
        lhs, rhs = (s.strip() for s in line.split("=~"))
        if not _NAME_RE.match(lhs):
            raise ModelSyntaxError(f"bad latent name {lhs!r}", lineno)
        if any(lhs == b[0] for b in blocks):
            raise ModelSyntaxError(f"latent {lhs!r} defined twice", lineno)
        if not rhs:
            raise ModelSyntaxError(f"latent {lhs!r} has no items", lineno)
        items = [s.strip() for s in rhs.split("+")]
        for it in items:
            if not _NAME_RE.match(it):
                raise ModelSyntaxError(f"bad item name {it!r}", lineno)
            if it in owner:
                raise ModelSyntaxError(
                    f"item {it!r} already loads on {owner[it]!r}; each item may load on one latent", lineno)
            owner[it] = lhs
        if len(set(items)) != len(items):
            raise ModelSyntaxError(f"repeated item under {lhs!r}", lineno)
        blocks.append((lhs, items, lineno))
    if not blocks:
        raise ModelSyntaxError("model text has no '=~' lines")
    latents = tuple(b[0] for b in blocks)
    for lat, _, lineno in blocks:
        if lat in owner:
            raise ModelSyntaxError(f"{lat!r} is both latent and item (higher-order models unsupported)", lineno)
    observed = tuple(it for _, items, _ in blocks for it in items)

    params = []
    for lat, items, _ in blocks:
        for i, it in enumerate(items):
            if not std_lv and i == 0:
                params.append(PathSpec(DIRECTED, lat, it, fixed_value=1.0))
            else:
                params.append(PathSpec(DIRECTED, lat, it, label=f"L_{lat}_{it}"))
    for it in observed:
        params.append(PathSpec(COVARIANCE, it, it, label=f"V_{it}"))
    for lat in latents:
        if std_lv:
            params.append(PathSpec(COVARIANCE, lat, lat, fixed_value=1.0))
        else:
            params.append(PathSpec(COVARIANCE, lat, lat, label=f"V_{lat}"))
    for i, a in enumerate(latents):
        for b in latents[i + 1:]:
            params.append(PathSpec(COVARIANCE, a, b, label=f"C_{a}_{b}"))
    if meanstructure:
        for it in observed:
            params.append(PathSpec(INTERCEPT, CONSTANT, it, label=f"M_{it}"))
    return SemModel(observed, latents, tuple(params), meanstructure)


def _fmt_num(x):
    return repr(float(x)) if x != int(x) else str(int(x))


def to_ram(m):
    """Canonical RAM text for ``m``."""
    lines = []
    for ps in m.params:
        arrow = DIRECTED if ps.kind in (DIRECTED, INTERCEPT) else COVARIANCE
        if ps.free:
            value = "NA" if ps.start_value is None else _fmt_num(ps.start_value)
            lines.append(f"{ps.tail} {arrow} {ps.head}, {ps.label}, {value}")
        else:
            lines.append(f"{ps.tail} {arrow} {ps.head}, NA, {_fmt_num(ps.fixed_value)}")
    return "\n".join(lines) + "\n"


def to_measurement(m):
    """Canonical measurement text; options (std_lv, meanstructure) are not encoded."""
    lines = []
    for lat in m.latents:
        items = [ps.head for ps in m.params if ps.kind == DIRECTED and ps.tail == lat]
        if not items or any(it not in m.observed for it in items):
            raise ValueError(f"latent {lat!r} is not a pure measurement factor")
        lines.append(f"{lat} =~ " + " + ".join(items))
    if any(ps.kind == DIRECTED and ps.tail in m.observed for ps in m.params):
        raise ValueError("model has observed-variable regressions; use RAM format")
    return "\n".join(lines) + "\n"


def load_model(path, fmt, std_lv=False, meanstructure=False, observed=None):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if fmt == "ram":
        return parse_ram(text, observed=observed)
    if fmt == "measurement":
        return parse_measurement(text, std_lv=std_lv, meanstructure=meanstructure)
    raise ValueError(f"unknown model format {fmt!r}")


@dataclass(frozen=True)
class Identification:
    identified: bool
    violations: tuple
    n_free: int
    moments: int


def identify(m):
    """Check scaling of every latent and the global parameter count."""
    violations = []
    for lat in m.latents:
        var = [ps for ps in m.params if ps.kind == COVARIANCE and ps.tail == lat and ps.head == lat]
        out = [ps for ps in m.params if ps.kind == DIRECTED and ps.tail == lat]
        if not out:
            violations.append(f"latent {lat} has no indicators or outgoing paths")
        if not var:
            violations.append(f"latent {lat} has no variance (or disturbance) path")
        fixed_var = any(not ps.free for ps in var)
        fixed_load = any(not ps.free for ps in out)
        if not (fixed_var or fixed_load):
            violations.append(f"latent {lat} is unscaled: fix its variance or one loading")
    if m.n_free > m.moments:
        violations.append(f"over-parameterised: {m.n_free} free parameters > {m.moments} moments")
    return Identification(not violations, tuple(violations), m.n_free, m.moments)
