"""Synthetic register-style data with a controllable planted signal.

The real register extract behind this project is private, so this module
encodes its feature dictionary (66 predictors: 38 categorical, 28
numerical, with per-feature missing rates) and generates deterministic
synthetic stand-ins. Numerical features come from truncated-normal and
(zero-inflated) log-normal families, categoricals from skewed
multinomials; the two risk targets are clamped linear functions of
z-scored feature columns plus Gaussian noise, so recovery-style tests
know the ground truth. Missingness is MCAR per feature except for two
feature blocks that are always masked jointly within a row.

Exact distribution parameters are configuration, not contract; the
schema (names, kinds, missing rates, block structure) is the contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .table import Column, DataTable, KIND_CATEGORICAL, KIND_NUMERICAL

GROUP_PERSONAL = "personal"
GROUP_HOUSEHOLD = "household"

TARGET_MPL = "mpl_avg_safe"
TARGET_GRQ = "risk_grq"
TARGETS = (TARGET_MPL, TARGET_GRQ)

_TARGET_BASE = 5.0
_TARGET_LO, _TARGET_HI = 0.0, 10.0

# substream tags so feature, mask and target draws never collide
_STREAM_FEATURE = 1
_STREAM_MISSING = 2
_STREAM_TARGET = 3


@dataclass(frozen=True)
class FeatureDef:
    name: str
    description: str
    kind: str
    missing_rate: float
    group: str
    cardinality: int | None = None  # categorical only
    dist: tuple = ()  # numerical generator family + params

    def __post_init__(self):
        if not 0.0 <= self.missing_rate <= 1.0:
            raise ValidationError(f"{self.name}: missing_rate outside [0,1]")
        if self.kind == KIND_CATEGORICAL and (self.cardinality is None or self.cardinality < 2):
            raise ValidationError(f"{self.name}: categorical needs cardinality >= 2")


@dataclass(frozen=True)
class FeatureSchema:
    entries: tuple[FeatureDef, ...]

    def __post_init__(self):
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate feature names in schema")

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def entry(self, name: str) -> FeatureDef:
        for e in self.entries:
            if e.name == name:
                return e
        raise ValidationError(f"schema has no feature {name!r}")

    def kinds(self) -> dict[str, str]:
        return {e.name: e.kind for e in self.entries}

    def count(self, kind: str) -> int:
        return sum(1 for e in self.entries if e.kind == kind)


@dataclass(frozen=True)
class GenConfig:
    n_rows: int
    seed: int
    signal: tuple[tuple[str, float], ...] = ()
    noise_sd: float = 1.0
    target: str = "both"  # mpl_avg_safe | risk_grq | both

    def __post_init__(self):
        if self.n_rows < 0:
            raise ValidationError("n_rows must be >= 0")
        if self.noise_sd < 0:
            raise ValidationError("noise_sd must be >= 0")
        if self.target not in (TARGET_MPL, TARGET_GRQ, "both"):
            raise ValidationError(f"unknown target {self.target!r}")


@dataclass(frozen=True)
class GroundTruth:
    signal: tuple[tuple[str, float], ...]
    noise_sd: float
    base: float
    targets: tuple[str, ...]

    @property
    def informative(self) -> tuple[str, ...]:
        return tuple(name for name, coef in self.signal if coef != 0.0)


def _num(name, desc, rate, group, dist):
    return FeatureDef(name, desc, KIND_NUMERICAL, rate, group, dist=dist)


def _cat(name, desc, rate, group, k):
    return FeatureDef(name, desc, KIND_CATEGORICAL, rate, group, cardinality=k)


# distribution tags: ("truncnorm", mean, sd, lo, hi) | ("lognormal", mu, sigma)
#                  | ("zi_lognormal", p_zero, mu, sigma) | ("square_of", feature)
_P, _H = GROUP_PERSONAL, GROUP_HOUSEHOLD

_ENTRIES: tuple[FeatureDef, ...] = (
    _num("LFTENQ2", "Age", 0.14, _P, ("truncnorm", 44.0, 12.0, 18.0, 67.0)),
    _cat("MIGRATIEACHTERGROND", "Migration background", 0.14, _P, 3),
    _cat("TYPHH2", "Household type", 0.14, _H, 6),
    _cat("PLHH2", "Household position of individual", 0.14, _H, 5),
    _cat("AANTALPERSHH2", "Household size", 0.14, _H, 8),
    _cat("AANTALKINDHH2", "Household number of children", 0.14, _H, 6),
    _cat("SBI2", "Sector (SBI) employee", 0.14, _P, 19),
    _cat("SMODELRAMINGPF2", "Pension fund", 0.14, _P, 12),
    _num("SMODELRAMINGPENSIOENPREMIEWG2", "Pension contribution employer", 0.3627, _P,
         ("zi_lognormal", 0.20, 7.6, 0.7)),
    _num("SMODELRAMINGPENSIOENPREMIEWN2", "Pension contribution employee", 0.3627, _P,
         ("zi_lognormal", 0.25, 7.2, 0.7)),
    _cat("INPSECJ2019", "Occupation social-economic category", 0.0, _P, 8),
    _cat("OCCUPATION2019", "Occupation 4 categories", 0.0, _P, 4),
    _cat("INPZELFSTANDIGEPL12019", "Occupation classification self-employed", 0.0, _P, 5),
    _cat("INPTYPZLF2019", "Occupation type of self-employed", 0.0, _P, 4),
    _cat("SBISELFEMPLOYED2019", "Sector (SBI) all types self-employed", 0.0, _P, 19),
    _num("INPPN700PEN2019", "Contribution pension employee (2nd pillar)", 0.0, _P,
         ("zi_lognormal", 0.30, 7.3, 0.8)),
    _num("INPPG710PEN2019", "Contribution pension employer (2nd pillar)", 0.0, _P,
         ("zi_lognormal", 0.30, 7.8, 0.8)),
    _num("INPPH770OUP2019", "Contribution private insurance old age (3rd pillar)", 0.0, _P,
         ("zi_lognormal", 0.85, 7.2, 1.0)),
    _num("INPPH570ZWP2019", "Contribution private insurance incapacitation", 0.0, _P,
         ("zi_lognormal", 0.80, 7.5, 0.9)),
    _cat("INPPINK2019", "Has individual personal income", 0.0, _P, 2),
    _num("INPPERSPRIM2019", "Income individual personal primary", 0.0, _P, ("lognormal", 10.35, 0.60)),
    _num("INPPERSINK2019", "Income individual personal", 0.14, _P, ("lognormal", 10.45, 0.55)),
    _num("INPPERSBRUT2019", "Income individual personal before tax", 0.14, _P, ("lognormal", 10.60, 0.55)),
    _cat("TYPHH2019", "Household type (register year)", 0.14, _H, 6),
    _cat("PLHH2019", "Household position of individual (register year)", 0.14, _H, 5),
    _cat("AANTALPERSHH2019", "Household size (register year)", 0.14, _H, 8),
    _cat("AANTALKINDHH2019", "Household number of children (register year)", 0.14, _H, 6),
    _cat("GBABURGSTNWKLASSE42019", "Marital status 4 categories", 0.14, _P, 4),
    _cat("VEHP100HVERM2019", "Wealth household percentile group", 0.14, _H, 100),
    _cat("VEHP100HVERMKL12019", "Wealth household decile group", 0.14, _H, 10),
    _num("VEHWVEREXEWH2019", "Wealth household total excluding house", 0.14, _H,
         ("zi_lognormal", 0.10, 10.8, 1.4)),
    _num("VEHW1000VERH2019", "Wealth household total", 0.14, _H, ("zi_lognormal", 0.05, 11.6, 1.3)),
    _num("VEHW1100BEZH2019", "Wealth household possessions", 0.14, _H, ("zi_lognormal", 0.05, 11.7, 1.3)),
    _num("VEHW1110FINH2019", "Wealth household financial possessions", 0.14, _H,
         ("zi_lognormal", 0.08, 10.4, 1.3)),
    _num("VEHW1111BANH2019", "Wealth household bank and saving balance", 0.14, _H,
         ("lognormal", 10.1, 1.2)),
    _num("VEHW1112EFFH2019", "Wealth household securities", 0.14, _H, ("zi_lognormal", 0.75, 10.0, 1.5)),
    _cat("SECURITIESPERC2019", "Securities share of liquid wealth (bucketed)", 0.14, _H, 21),
    _num("VEHW1120ONRH2019", "Wealth household real estate", 0.14, _H, ("zi_lognormal", 0.40, 12.5, 0.6)),
    _num("VEHW1121WONH2019", "Wealth household house", 0.14, _H, ("zi_lognormal", 0.42, 12.5, 0.55)),
    _num("VEHW1122OGOH2019", "Wealth household other real estate", 0.14, _H,
         ("zi_lognormal", 0.90, 11.8, 0.9)),
    _num("VEHW1130ONDH2019", "Wealth household entrepreneurial capacity", 0.14, _H,
         ("zi_lognormal", 0.70, 10.6, 1.4)),
    _num("VEHW1140ABEH2019", "Wealth household substantial interest", 0.14, _H,
         ("zi_lognormal", 0.92, 11.9, 1.4)),
    _num("VEHW1150OVEH2019", "Wealth household other possessions", 0.14, _H,
         ("zi_lognormal", 0.80, 9.2, 1.2)),
    _num("VEHW1200STOH2019", "Debt household total", 0.14, _H, ("zi_lognormal", 0.35, 11.9, 1.0)),
    _num("VEHW1210SHYH2019", "Debt household mortgage", 0.14, _H, ("zi_lognormal", 0.45, 12.1, 0.7)),
    _num("VEHW1220SSTH2019", "Debt household study", 0.14, _H, ("zi_lognormal", 0.85, 9.6, 0.9)),
    _num("VEHW1230SOVH2019", "Debt household other", 0.14, _H, ("zi_lognormal", 0.75, 9.3, 1.1)),
    _cat("INHEHALGR2019", "Household homeowner", 0.14, _H, 2),
    _cat("INHP100HGEST2019", "Income household spendable percentile group", 0.14, _H, 100),
    _cat("INHP100HGESTKL12019", "Income household spendable decile group", 0.14, _H, 10),
    _num("INHGESTINKH2019", "Income household standardized spendable", 0.14, _H,
         ("lognormal", 10.30, 0.45)),
    _cat("OPLNIVSOI2016AGG1HBMETNIRWO2019", "Education level 3 categories", 0.14, _P, 3),
    _cat("INPPOSHHK2019", "Position towards main breadwinner", 0.14, _H, 5),
    _cat("INHBBIHJ2019", "Main source of household income", 0.14, _H, 6),
    _cat("NRCHILDREN2019", "Number of children", 0.14, _P, 7),
    _cat("NRCHILDRENSAMEADRS2019", "Children at same address", 0.3190, _P, 7),
    _cat("NRCHILDRENCOPARENTADRS2019", "Children at co-parent address", 0.3190, _P, 7),
    _cat("DEADBORN2019", "Deadborn child indicator", 0.3190, _P, 2),
    _cat("NRCOPARENTS2019", "Number of co-parents", 0.3190, _P, 5),
    _cat("LASTCOPARENTSAMEADRS2019", "Last co-parent at same address", 0.3190, _P, 2),
    _num("Age_squared", "Squared value of the age", 0.14, _P, ("square_of", "LFTENQ2")),
    _cat("GBAGESLACHT", "Sex", 0.0, _P, 2),
    _cat("MAINBREADWINNER2019", "Main breadwinner", 0.0, _H, 2),
    _cat("SECURITIESBIN2019", "Household has securities", 0.0, _H, 2),
    _cat("HOMEOWNER2019_", "Home owner", 0.0, _H, 2),
    _cat("CHILDBIN2019", "Children born indicator", 0.0, _P, 2),
)

# Features whose missingness is drawn once per row and applied jointly.
MISSING_BLOCKS: tuple[tuple[str, ...], ...] = (
    ("SMODELRAMINGPENSIOENPREMIEWG2", "SMODELRAMINGPENSIOENPREMIEWN2"),
    (
        "NRCHILDRENSAMEADRS2019",
        "NRCHILDRENCOPARENTADRS2019",
        "DEADBORN2019",
        "NRCOPARENTS2019",
        "LASTCOPARENTSAMEADRS2019",
    ),
)


def register_schema() -> FeatureSchema:
    """The 66-entry predictor dictionary (38 categorical, 28 numerical)."""
    return FeatureSchema(_ENTRIES)


def _rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, stream, index]))


def _level_name(i: int) -> str:
    return f"lvl{i:02d}"


def _draw_numeric(entry: FeatureDef, n: int, rng: np.random.Generator,
                  drawn: dict[str, np.ndarray]) -> np.ndarray:
    tag = entry.dist[0]
    if tag == "truncnorm":
        _, mean, sd, lo, hi = entry.dist
        out = rng.normal(mean, sd, size=n)
        # resample out-of-range draws; bounded retries keep it deterministic
        for _ in range(100):
            bad = (out < lo) | (out > hi)
            if not bad.any():
                break
            out[bad] = rng.normal(mean, sd, size=int(bad.sum()))
        np.clip(out, lo, hi, out=out)
        return np.round(out)
    if tag == "lognormal":
        _, mu, sigma = entry.dist
        return np.round(rng.lognormal(mu, sigma, size=n), 2)
    if tag == "zi_lognormal":
        _, p_zero, mu, sigma = entry.dist
        vals = np.round(rng.lognormal(mu, sigma, size=n), 2)
        zero = rng.random(n) < p_zero
        vals[zero] = 0.0
        return vals
    if tag == "square_of":
        base = drawn[entry.dist[1]]
        return base * base
    raise ValidationError(f"{entry.name}: unknown distribution tag {tag!r}")


def _draw_categorical(entry: FeatureDef, n: int, rng: np.random.Generator) -> np.ndarray:
    k = entry.cardinality
    decay = 0.75 if k <= 12 else 0.96
    probs = decay ** np.arange(k)
    probs /= probs.sum()
    codes = rng.choice(k, size=n, p=probs)
    levels = np.array([_level_name(i) for i in range(k)], dtype=object)
    return levels[codes]


def _zscore(values: np.ndarray) -> np.ndarray:
    if len(values) == 0:
        return np.zeros_like(values)
    sd = values.std()
    if sd == 0 or not np.isfinite(sd):
        return np.zeros_like(values)
    return (values - values.mean()) / sd


def _signal_column(col: Column) -> np.ndarray:
    if col.kind == KIND_NUMERICAL:
        return _zscore(col.values.astype(np.float64))
    # ordinal level index stands in for a numeric effect of the category
    codes = np.array([int(str(v)[3:]) for v in col.values], dtype=np.float64)
    return _zscore(codes)


def generate(schema: FeatureSchema, config: GenConfig) -> tuple[DataTable, GroundTruth]:
    """Deterministic synthetic table plus the ground truth used to build it."""
    names = set(schema.names)
    for name, _ in config.signal:
        if name not in names:
            raise ValidationError(f"signal feature {name!r} not in schema")

    n = config.n_rows
    drawn: dict[str, np.ndarray] = {}
    columns: list[Column] = []
    for i, entry in enumerate(schema.entries):
        rng = _rng(config.seed, _STREAM_FEATURE, i)
        if entry.kind == KIND_NUMERICAL:
            values = _draw_numeric(entry, n, rng, drawn)
            drawn[entry.name] = values
            columns.append(Column(entry.name, KIND_NUMERICAL, values, np.zeros(n, dtype=bool)))
        else:
            values = _draw_categorical(entry, n, rng)
            columns.append(Column(entry.name, KIND_CATEGORICAL, values, np.zeros(n, dtype=bool)))

    by_name = {c.name: c for c in columns}
    latent_signal = np.zeros(n)
    for name, coef in config.signal:
        latent_signal += coef * _signal_column(by_name[name])

    wanted = TARGETS if config.target == "both" else (config.target,)
    targets: dict[str, np.ndarray] = {}
    for j, tname in enumerate(TARGETS):
        if tname not in wanted:
            continue
        rng = _rng(config.seed, _STREAM_TARGET, j)
        noise = rng.normal(0.0, config.noise_sd, size=n) if config.noise_sd > 0 else np.zeros(n)
        latent = _TARGET_BASE + latent_signal + noise
        clipped = np.clip(latent, _TARGET_LO, _TARGET_HI)
        if tname == TARGET_GRQ:
            targets[tname] = np.round(clipped)
        else:
            targets[tname] = clipped

    truth = GroundTruth(
        signal=tuple(config.signal),
        noise_sd=config.noise_sd,
        base=_TARGET_BASE,
        targets=tuple(t for t in TARGETS if t in wanted),
    )
    return DataTable(columns, targets), truth


def apply_missingness(table: DataTable, schema: FeatureSchema, seed: int) -> DataTable:
    """Mask cells MCAR at each feature's rate; block features mask jointly."""
    out = table.copy()
    n = out.n_rows
    block_of = {}
    for b, group in enumerate(MISSING_BLOCKS):
        for name in group:
            block_of[name] = b
    block_draws: dict[int, np.ndarray] = {}
    for i, entry in enumerate(schema.entries):
        if entry.missing_rate == 0.0:
            continue
        if entry.name in block_of:
            b = block_of[entry.name]
            if b not in block_draws:
                rng = _rng(seed, _STREAM_MISSING, 1000 + b)
                block_draws[b] = rng.random(n) < schema.entry(MISSING_BLOCKS[b][0]).missing_rate
            mask = block_draws[b]
        else:
            rng = _rng(seed, _STREAM_MISSING, i)
            mask = rng.random(n) < entry.missing_rate
        col = out.column(entry.name)
        col.mask |= mask
        if col.kind == KIND_NUMERICAL:
            col.values[mask] = np.nan
        else:
            col.values[mask] = None
    return out


# Default planted-signal dataset used by the demo pipeline and reports:
# ten informative predictors out of the 66.
DEFAULT_SIGNAL: tuple[tuple[str, float], ...] = (
    ("VEHW1111BANH2019", 0.9),
    ("VEHW1000VERH2019", 0.7),
    ("INPPERSINK2019", -0.8),
    ("VEHW1200STOH2019", -0.6),
    ("VEHW1220SSTH2019", -0.5),
    ("SMODELRAMINGPENSIOENPREMIEWN2", 0.5),
    ("INPPH770OUP2019", 0.6),
    ("LFTENQ2", -0.45),
    ("GBAGESLACHT", 0.35),
    ("OPLNIVSOI2016AGG1HBMETNIRWO2019", 0.4),
)


def default_config(n_rows: int = 600, seed: int = 20240 , noise_sd: float = 1.0) -> GenConfig:
    return GenConfig(n_rows=n_rows, seed=seed, signal=DEFAULT_SIGNAL, noise_sd=noise_sd)


def make_default_dataset(n_rows: int = 600, seed: int = 20240,
                         with_missing: bool = True) -> tuple[DataTable, GroundTruth, FeatureSchema]:
    schema = register_schema()
    table, truth = generate(schema, default_config(n_rows=n_rows, seed=seed))
    if with_missing:
        table = apply_missingness(table, schema, seed=seed + 1)
    return table, truth, schema


def schema_missing_rates(schema: FeatureSchema) -> dict[str, float]:
    return {e.name: e.missing_rate for e in schema.entries}
