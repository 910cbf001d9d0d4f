"""
Intelligent Driver Model.

accel = a * [1 - (v/v0)^delta - (s*/s)^2],  s* = s0 + v*T + v*dv / (2*sqrt(a*b))

The braking term is left unclipped; integration clamps speed at zero.
"""

import math

from pydantic import BaseModel, ConfigDict, Field

from traffic_graph_sim.errors import OracleError

DEFAULT_IDM_V0 = 15.0
DEFAULT_IDM_T = 1.5
DEFAULT_IDM_A = 1.0
DEFAULT_IDM_B = 1.5
DEFAULT_IDM_DELTA = 4.0
DEFAULT_IDM_S0 = 2.0


class IdmParams(BaseModel):
    """IDM parameters; defaults are reconstructions, no published values exist"""
    model_config = ConfigDict(extra="forbid")

    v0: float = Field(DEFAULT_IDM_V0, gt=0, description="desired speed, m/s")
    T: float = Field(DEFAULT_IDM_T, gt=0, description="safe time headway, s")
    a: float = Field(DEFAULT_IDM_A, gt=0, description="maximum acceleration, m/s2")
    b: float = Field(DEFAULT_IDM_B, gt=0, description="comfortable deceleration, m/s2")
    delta: float = Field(DEFAULT_IDM_DELTA, gt=0, description="acceleration exponent")
    s0: float = Field(DEFAULT_IDM_S0, gt=0, description="minimum gap, m")


def desired_gap(v: float, dv: float, p: IdmParams) -> float:
    return p.s0 + v * p.T + v * dv / (2.0 * math.sqrt(p.a * p.b))


def idm_accel(v: float, dv: float, s: float, p: IdmParams) -> float:
    """
    IDM acceleration for a follower at speed v, approach rate dv
    (follower minus leader speed) and net gap s.
    """
    if s <= 0:
        raise OracleError(f"IDM gap must be positive, got {s}")
    if v < 0:
        raise OracleError(f"IDM speed must be non-negative, got {v}")
    s_star = desired_gap(v, dv, p)
    return p.a * (1.0 - (v / p.v0) ** p.delta - (s_star / s) ** 2)


def equilibrium_gap(v: float, p: IdmParams) -> float:
    """Gap at which a follower at steady speed v behind an equal-speed leader has zero accel"""
    if not 0 <= v < p.v0:
        raise OracleError(f"equilibrium gap defined for 0 <= v < v0, got {v}")
    return (p.s0 + v * p.T) / math.sqrt(1.0 - (v / p.v0) ** p.delta)
