import math
from enum import Enum
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models.controller import (
    DEFAULT_EPS,
    DitherKind,
    DitherSchedule,
    EscConfig,
    RcacPenalty,
    RcacStructure,
    split_list,
)

# Van der Pol cost window, seconds
DEFAULT_WINDOW = 0.5
DEFAULT_SUBSTEPS = 50
DEFAULT_VDP_STATE = (2.0, 0.0)


class PlantKind(str, Enum):
    SISO_QUADRATIC = "siso_quadratic"
    MISO_QUADRATIC = "miso_quadratic"
    VAN_DER_POL = "van_der_pol"

    @property
    def input_dim(self) -> int:
        return 1 if self is PlantKind.SISO_QUADRATIC else 2

    @property
    def is_static(self) -> bool:
        return self is not PlantKind.VAN_DER_POL


class ControllerKind(str, Enum):
    ESC = "esc"
    RCESC = "rcesc"
    CONSTANT = "constant"


class ReferencePiece(BaseModel):
    """One constant piece of r(t); active for t > start (the first piece from t = 0)."""
    model_config = ConfigDict(frozen=True)

    start: float = Field(ge=0)
    value: Tuple[float, ...]

    @field_validator("value", mode="before")
    @classmethod
    def _split_value(cls, v):
        return split_list(v)


def parse_reference(text: str) -> Tuple[dict, ...]:
    """`"0:1,2; 500:-1,-2"` -> piece dicts in file order."""
    pieces = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        start, sep, value = chunk.partition(":")
        if not sep:
            raise ValueError(f"reference piece {chunk!r} is not 'time:value'")
        pieces.append({"start": start.strip(), "value": value})
    return tuple(pieces)


class PlantSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: PlantKind
    reference: Tuple[ReferencePiece, ...] = ()
    initial_input: Optional[Tuple[float, ...]] = None
    initial_state: Tuple[float, float] = DEFAULT_VDP_STATE
    window: float = Field(default=DEFAULT_WINDOW, gt=0)

    @field_validator("reference", mode="before")
    @classmethod
    def _parse_reference(cls, v):
        return parse_reference(v) if isinstance(v, str) else v

    @field_validator("initial_input", "initial_state", mode="before")
    @classmethod
    def _split(cls, v):
        return split_list(v)

    @model_validator(mode="after")
    def _check_dims(self) -> "PlantSpec":
        m = self.kind.input_dim
        if self.kind.is_static:
            if not self.reference:
                raise ValueError(f"{self.kind.value} needs a reference")
            if self.reference[0].start != 0:
                raise ValueError("the first reference piece must start at 0")
            starts = [piece.start for piece in self.reference]
            if starts != sorted(starts):
                raise ValueError("reference pieces must be ordered by start time")
            if any(len(piece.value) != m for piece in self.reference):
                raise ValueError(f"reference values need {m} components")
        if self.initial_input is not None and len(self.initial_input) != m:
            raise ValueError(f"initial_input needs {m} components")
        if not all(math.isfinite(x) for x in self.initial_state):
            raise ValueError("initial_state must be finite")
        return self

    @property
    def input_dim(self) -> int:
        return self.kind.input_dim


class SimSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    sample_time: float = Field(gt=0)
    horizon: int = Field(ge=1)
    substeps: int = Field(default=DEFAULT_SUBSTEPS, ge=1)


class RcacSection(BaseModel):
    """[rcac]; the dimensions m, p and l_f follow from the plant."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    structure: RcacStructure = RcacStructure.GENERAL_IO
    l_c: int = Field(default=1, ge=1)
    pid_mask: Tuple[str, ...] = ("p", "i", "d")
    r_u: float = Field(default=0.0, ge=0)
    p0: float = Field(default=1.0, gt=0)
    penalty: RcacPenalty = RcacPenalty.EFFORT
    reset_period: Optional[int] = Field(default=None, ge=1)

    @field_validator("pid_mask", mode="before")
    @classmethod
    def _split_mask(cls, v):
        return split_list(v)


class KfSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    q: Tuple[float, ...]
    r: Tuple[float, ...]
    p0: Tuple[float, ...]
    lags: Tuple[int, ...]

    @field_validator("q", "r", "p0", "lags", mode="before")
    @classmethod
    def _split(cls, v):
        return split_list(v)


class RcescSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    nu: float = Field(default=0.0, ge=0)
    eps: float = Field(default=DEFAULT_EPS, gt=0)


class ConstantSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    value: Tuple[float, ...] = ()

    @field_validator("value", mode="before")
    @classmethod
    def _split(cls, v):
        return split_list(v)


class OutputSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    directory: Optional[str] = None


class Scenario(BaseModel):
    """A complete, validated run description (one scenario file)."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field(min_length=1)
    controller: ControllerKind = ControllerKind.RCESC
    description: Optional[str] = None
    plant: PlantSpec
    sim: SimSpec
    rcac: Optional[RcacSection] = None
    kf: Optional[KfSection] = None
    rcesc: Optional[RcescSection] = None
    dither: Optional[DitherSchedule] = None
    esc: Optional[EscConfig] = None
    constant: Optional[ConstantSection] = None
    output: OutputSection = OutputSection()

    @model_validator(mode="after")
    def _check_sections(self) -> "Scenario":
        if self.controller is ControllerKind.RCESC:
            self.require(ControllerKind.RCESC)
        elif self.controller is ControllerKind.ESC:
            self.require(ControllerKind.ESC)
        return self

    def require(self, controller: ControllerKind) -> None:
        """Raise ValueError when the sections needed by `controller` are missing or mis-sized."""
        m = self.plant.input_dim
        if controller is ControllerKind.RCESC:
            missing = [name for name in ("rcac", "kf") if getattr(self, name) is None]
            if missing:
                raise ValueError(f"controller rcesc needs section(s) {', '.join(missing)}")
        elif controller is ControllerKind.ESC:
            if self.esc is None:
                raise ValueError("controller esc needs an [esc] section")
            if self.esc.m != m:
                raise ValueError(f"esc needs {m} dither frequencies for this plant")
        elif controller is ControllerKind.CONSTANT:
            if self.constant is not None and self.constant.value and len(self.constant.value) != m:
                raise ValueError(f"constant value needs {m} components")

    @property
    def dither_schedule(self) -> DitherSchedule:
        return self.dither if self.dither is not None else DitherSchedule(kind=DitherKind.NONE)
