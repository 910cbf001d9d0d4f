"""
Krauss safe-speed car-following, SUMO's default model.

v_safe = v_l + (gap - v_l*tau) / ((v_l + v_f) / (2*b) + tau)
v_des  = min(v_max, v_f + a*dt, v_safe)
v_next = max(0, v_des - sigma*a*dt*noise)
"""

from pydantic import BaseModel, ConfigDict, Field

DEFAULT_KRAUSS_A = 2.6
DEFAULT_KRAUSS_B = 4.5
DEFAULT_KRAUSS_TAU = 1.0
DEFAULT_KRAUSS_SIGMA = 0.0
DEFAULT_KRAUSS_V_MAX = 15.0
DEFAULT_KRAUSS_MIN_GAP = 2.5


class KraussParams(BaseModel):
    """Krauss parameters; sigma=0 keeps rollouts reproducible"""
    model_config = ConfigDict(extra="forbid")

    a: float = Field(DEFAULT_KRAUSS_A, gt=0, description="acceleration, m/s2")
    b: float = Field(DEFAULT_KRAUSS_B, gt=0, description="deceleration, m/s2")
    tau: float = Field(DEFAULT_KRAUSS_TAU, gt=0, description="reaction time, s")
    sigma: float = Field(DEFAULT_KRAUSS_SIGMA, ge=0, le=1, description="driver imperfection")
    v_max: float = Field(DEFAULT_KRAUSS_V_MAX, gt=0, description="maximum speed, m/s")
    min_gap: float = Field(DEFAULT_KRAUSS_MIN_GAP, ge=0, description="standstill gap kept by the simulator, m")


def safe_speed(v_f: float, v_l: float, gap: float, p: KraussParams) -> float:
    return v_l + (gap - v_l * p.tau) / ((v_l + v_f) / (2.0 * p.b) + p.tau)


def krauss_next_speed(v_f: float, v_l: float, gap: float, p: KraussParams,
                      dt: float, noise: float) -> float:
    """Next follower speed, clamped to [0, v_max]"""
    gap = max(gap, 0.0)
    v_f = max(v_f, 0.0)
    v_l = max(v_l, 0.0)
    v_des = min(p.v_max, v_f + p.a * dt, safe_speed(v_f, v_l, gap, p))
    v_next = max(0.0, v_des - p.sigma * p.a * dt * noise)
    return min(v_next, p.v_max)
