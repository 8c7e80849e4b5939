import math
from enum import Enum
from typing import Any, Optional, Tuple, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from core.errors import ConfigurationError

ModelT = TypeVar("ModelT", bound=BaseModel)

DEFAULT_EPS = 1e-4


def split_list(value: Any) -> Any:
    """Accept `"1, 2"` / `1.5` / `[1, 2]` for tuple-valued fields."""
    if isinstance(value, str):
        return tuple(part.strip() for part in value.split(",") if part.strip())
    if isinstance(value, (int, float)):
        return (value,)
    return value


def build_model(model_cls: Type[ModelT], **values: Any) -> ModelT:
    """
    Construct a config model, turning pydantic's ValidationError into a
    ConfigurationError that names the first offending field.
    """
    try:
        return model_cls(**values)
    except ValidationError as e:
        raise configuration_error(e) from e


def configuration_error(error: ValidationError, prefix: str = "") -> ConfigurationError:
    first = error.errors()[0]
    loc = ".".join(str(part) for part in first["loc"])
    field = ".".join(part for part in (prefix, loc) if part) or None
    return ConfigurationError(first["msg"], field=field)


class EscConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    amplitude: float = Field(gt=0)
    k_esc: float = Field(ge=0)
    omegas: Tuple[float, ...]
    # Controller rate; None runs the baseline at the loop sample time
    sample_time: Optional[float] = Field(default=None, gt=0)
    # Washout corner in rad/s ahead of demodulation; None demodulates J itself
    highpass: Optional[float] = Field(default=None, gt=0)

    @field_validator("omegas", mode="before")
    @classmethod
    def _split_omegas(cls, v):
        return split_list(v)

    @field_validator("omegas")
    @classmethod
    def _check_omegas(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if not v:
            raise ValueError("at least one dither frequency is required")
        if any(w <= 0 or not math.isfinite(w) for w in v):
            raise ValueError("dither frequencies must be positive and finite")
        if len(set(v)) != len(v):
            raise ValueError("dither frequencies must be pairwise distinct")
        return v

    @property
    def m(self) -> int:
        return len(self.omegas)


class RcacStructure(str, Enum):
    GENERAL_IO = "general_io"
    PID = "pid"


class RcacPenalty(str, Enum):
    EFFORT = "effort"
    RATE = "rate"


PID_TERMS = ("p", "i", "d")


class RcacConfig(BaseModel):
    """
    RCAC controller structure and adaptation weights.

    GENERAL_IO uses the windowed input/output regressor of length l_c;
    PID uses the masked [P, I, D] regressor, one gain per input channel,
    and needs p = 1.

    EFFORT weights r_u ||phi theta||^2; RATE weights the change from the
    previous controller output instead. A reset_period of N returns the
    covariance to p0 I every N samples, keeping theta.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    structure: RcacStructure = RcacStructure.GENERAL_IO
    l_c: int = Field(default=1, ge=1)
    pid_mask: Tuple[str, ...] = PID_TERMS
    m: int = Field(default=1, ge=1)
    p: int = Field(default=1, ge=1)
    r_u: float = Field(default=0.0, ge=0)
    p0: float = Field(default=1.0, gt=0)
    l_f: int = Field(default=1, ge=1)
    penalty: RcacPenalty = RcacPenalty.EFFORT
    reset_period: Optional[int] = Field(default=None, ge=1)

    @field_validator("pid_mask", mode="before")
    @classmethod
    def _split_mask(cls, v):
        return tuple(term.lower() for term in split_list(v))

    @field_validator("pid_mask")
    @classmethod
    def _canonical_mask(cls, v: Tuple[str, ...]) -> Tuple[str, ...]:
        unknown = set(v) - set(PID_TERMS)
        if unknown:
            raise ValueError(f"unknown PID terms {sorted(unknown)}")
        if not v or len(set(v)) != len(v):
            raise ValueError("mask must name each of p, i, d at most once and at least one")
        return tuple(term for term in PID_TERMS if term in v)

    @model_validator(mode="after")
    def _check_pid_dims(self) -> "RcacConfig":
        if self.structure is RcacStructure.PID and self.p != 1:
            raise ValueError("the PID structure requires p = 1")
        return self

    @property
    def l_theta(self) -> int:
        if self.structure is RcacStructure.PID:
            return len(self.pid_mask) * self.m
        return self.l_c * self.m * (self.m + self.p)


class GradKfConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    m: int = Field(ge=1)
    channels: int = Field(default=1, ge=1)
    # One value for all channels or one per channel
    q: Tuple[float, ...]
    r: Tuple[float, ...]
    p0: Tuple[float, ...]
    lags: Tuple[int, ...]

    @field_validator("q", "r", "p0", "lags", mode="before")
    @classmethod
    def _split(cls, v):
        return split_list(v)

    @field_validator("q", "r", "p0")
    @classmethod
    def _positive(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if not v or any(x <= 0 or not math.isfinite(x) for x in v):
            raise ValueError("weights must be positive and finite")
        return v

    @model_validator(mode="after")
    def _check_shapes(self) -> "GradKfConfig":
        for name in ("q", "r", "p0"):
            if len(getattr(self, name)) not in (1, self.channels):
                raise ValueError(f"{name} needs 1 or {self.channels} values")
        if len(self.lags) != self.m:
            raise ValueError(f"lags needs exactly m = {self.m} indices")
        if self.lags[0] <= 0 or any(b <= a for a, b in zip(self.lags, self.lags[1:])):
            raise ValueError("lags must be positive and strictly increasing")
        return self

    def weights(self, channel: int) -> Tuple[float, float, float]:
        """(q_i, r_i, p_{i,0}) for one cost channel."""
        pick = lambda values: values[channel] if len(values) > 1 else values[0]
        return pick(self.q), pick(self.r), pick(self.p0)

    @property
    def depth(self) -> int:
        return self.lags[-1] + 1


class DitherKind(str, Enum):
    NONE = "none"
    SINUSOID = "sinusoid"
    DECAYING_SINUSOID = "decaying_sinusoid"
    EXP_DECAY = "exp_decay"


class DitherSchedule(BaseModel):
    """State-independent perturbation d_k evaluated at t = k*T_s."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: DitherKind = DitherKind.DECAYING_SINUSOID
    amplitude: Tuple[float, ...] = (0.02,)
    omegas: Tuple[float, ...] = ()
    tau: float = Field(default=100.0, gt=0)

    @field_validator("amplitude", "omegas", mode="before")
    @classmethod
    def _split(cls, v):
        return split_list(v)

    @field_validator("amplitude")
    @classmethod
    def _check_amplitude(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if not v or any(a < 0 or not math.isfinite(a) for a in v):
            raise ValueError("amplitudes must be non-negative and finite")
        return v

    @model_validator(mode="after")
    def _check_frequencies(self) -> "DitherSchedule":
        if self.kind in (DitherKind.SINUSOID, DitherKind.DECAYING_SINUSOID):
            if not self.omegas:
                raise ValueError(f"{self.kind.value} needs omegas")
            if any(w <= 0 for w in self.omegas) or len(set(self.omegas)) != len(self.omegas):
                raise ValueError("omegas must be positive and pairwise distinct")
        return self


class RcescConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    nu: float = Field(default=0.0, ge=0)
    eps: float = Field(default=DEFAULT_EPS, gt=0)
    rcac: RcacConfig
    kf: GradKfConfig
    dither: DitherSchedule = DitherSchedule(kind=DitherKind.NONE)

    @model_validator(mode="after")
    def _check_assembly(self) -> "RcescConfig":
        m = self.rcac.m
        if self.rcac.l_f != m:
            raise ValueError(f"rcac.l_f must equal m = {m}")
        if self.kf.m != m:
            raise ValueError(f"kf.m must equal rcac.m = {m}")
        if self.kf.channels != self.rcac.p:
            raise ValueError(f"kf.channels must equal rcac.p = {self.rcac.p}")
        if self.dither.omegas and len(self.dither.omegas) != m:
            raise ValueError(f"dither needs one frequency per input channel ({m})")
        if len(self.dither.amplitude) not in (1, m):
            raise ValueError(f"dither amplitude needs 1 or {m} values")
        return self
