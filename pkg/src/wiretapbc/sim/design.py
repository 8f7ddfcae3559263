"""Choosing scheme rates for a target rate pair.

The scheme has three groups of constraints on its internal rates: decoding
(codebook exponents below the layer informations), mutual covering (enough
sub-bin room for a jointly typical pair) and secrecy (enough randomisation
in every layer). ``design_rates`` solves one linear program that meets a
target (R1, R2) while maximising the smallest slack across all of them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy.optimize import linprog

from ..hull import RateRegion
from ..probcore import JointPmf, WiretapBc, conditional_mi
from ..regions import inner_bounds
from .scheme import SIM_AXES, SimConfig

ACTIVE_TOL = 1e-12
MAX_SLACK = 1.0
SIZE_PENALTY = 1e-6


class DesignError(ValueError):
    """No rate assignment meets the target with nonnegative slack."""


def scheme_informations(ch: WiretapBc, aux: JointPmf) -> Dict[str, float]:
    """Information terms that enter the scheme constraints."""
    j = ch.attach_outputs(aux.marginal(SIM_AXES))

    def I(a, b, c=()):
        return conditional_mi(j, a, b, c)

    return {
        "I(U1;U2|Q)": I("U1", "U2", "Q"),
        "I(U1;Y1|Q)": I("U1", "Y1", "Q"),
        "I(U2;Y2|Q)": I("U2", "Y2", "Q"),
        "I(QU1;Y1)": I(("Q", "U1"), "Y1"),
        "I(QU2;Y2)": I(("Q", "U2"), "Y2"),
        "I(QU1U2;Z)": I(("Q", "U1", "U2"), "Z"),
        "I(QU1;Z)": I(("Q", "U1"), "Z"),
        "I(QU2;Z)": I(("Q", "U2"), "Z"),
        "I(Q;Z)": I("Q", "Z"),
        "H(Q)": j.entropy("Q"),
        "H(U1|Q)": j.entropy(("Q", "U1")) - j.entropy("Q"),
        "H(U2|Q)": j.entropy(("Q", "U2")) - j.entropy("Q"),
    }


@dataclass
class RateDesign:
    t: tuple
    r0_split: tuple
    rbar: tuple
    rtilde: tuple
    slack: float
    info: dict

    def to_dict(self) -> dict:
        return {"t": list(self.t), "r0_split": list(self.r0_split), "rbar": list(self.rbar),
                "rtilde": list(self.rtilde), "slack": self.slack, "info": self.info}


# variable order: R01 R02 Rb1 Rb2 Rt1 Rt2 T0 T1 T2 s
_V = {name: i for i, name in enumerate(("R01", "R02", "Rb1", "Rb2", "Rt1", "Rt2",
                                         "T0", "T1", "T2", "s"))}


def _row(**coef) -> np.ndarray:
    r = np.zeros(len(_V))
    for k, v in coef.items():
        r[_V[k]] = v
    return r


def design_rates(ch: WiretapBc, aux: JointPmf, r1: float, r2: float,
                 max_slack: float = MAX_SLACK) -> RateDesign:
    """Scheme rates meeting (r1, r2) with the largest uniform slack.

    Layers with no entropy (a constant Q or a U_j determined by Q) are fixed
    to zero rate, and constraints that then reduce to ``0 <= 0`` are dropped
    so they do not pin the slack at zero.
    """
    if r1 < 0 or r2 < 0:
        raise ValueError("target rates must be nonnegative")
    info = scheme_informations(ch, aux)
    act_q = info["H(Q)"] > ACTIVE_TOL
    act1 = info["H(U1|Q)"] > ACTIVE_TOL
    act2 = info["H(U2|Q)"] > ACTIVE_TOL
    a_ub, b_ub = [], []

    def le(row, rhs, slack=True):
        if slack:
            row = row + _row(s=1.0)
        a_ub.append(row)
        b_ub.append(rhs)

    le(_row(R01=1, R02=1, T0=-1), 0.0, slack=False)
    le(_row(Rt1=1, T1=-1, Rb1=1), 0.0, slack=False)
    le(_row(Rt2=1, T2=-1, Rb2=1), 0.0, slack=False)
    i12 = info["I(U1;U2|Q)"]
    if act1 or act2:
        le(_row(T1=-1, Rb1=1, Rt1=1, T2=-1, Rb2=1, Rt2=1), -i12, slack=i12 > ACTIVE_TOL)
    for j, act in ((1, act1), (2, act2)):
        if act:
            le(_row(**{f"T{j}": 1}), info[f"I(U{j};Y{j}|Q)"])
        if act or act_q:
            le(_row(T0=1, **{f"T{j}": 1}), info[f"I(QU{j};Y{j})"])
    if act_q or act1 or act2:
        le(_row(R01=1, R02=1, Rb1=1, Rb2=1, T0=-1, T1=-1, T2=-1),
           -(info["I(QU1U2;Z)"] + i12))
    if act_q or act2:
        le(_row(R01=1, R02=1, T0=-1, Rb2=1, T2=-1), -info["I(QU2;Z)"])
    if act_q or act1:
        le(_row(R01=1, R02=1, T0=-1, Rb1=1, T1=-1), -info["I(QU1;Z)"])
    if act_q:
        le(_row(R01=1, R02=1, T0=-1), -info["I(Q;Z)"])
    a_eq = [_row(R01=1, Rb1=1), _row(R02=1, Rb2=1)]
    b_eq = [r1, r2]
    bounds = [(0, None)] * (len(_V) - 1) + [(None, max_slack)]
    for name, act in (("R01", act_q), ("R02", act_q), ("T0", act_q), ("Rb1", act1),
                      ("Rt1", act1), ("T1", act1), ("Rb2", act2), ("Rt2", act2), ("T2", act2)):
        if not act:
            bounds[_V[name]] = (0, 0)
    c = _row(s=-1.0) + SIZE_PENALTY * _row(T0=1, T1=1, T2=1)
    res = linprog(c, A_ub=np.array(a_ub), b_ub=np.array(b_ub), A_eq=np.array(a_eq),
                  b_eq=np.array(b_eq), bounds=bounds, method="highs")
    if res.status != 0:
        raise DesignError(f"rate design LP failed: {res.message}")
    v = np.maximum(res.x, 0.0)
    slack = float(res.x[_V["s"]])
    if slack < -1e-12:
        raise DesignError(f"target ({r1:.6g}, {r2:.6g}) is not reachable with this aux law "
                          f"(best slack {slack:.3g})")
    r0 = (v[_V["R01"]], v[_V["R02"]])
    return RateDesign(t=(v[_V["T0"]], v[_V["T1"]], v[_V["T2"]]), r0_split=r0,
                      rbar=(r0[0] + r0[1], v[_V["Rb1"]], v[_V["Rb2"]]),
                      rtilde=(v[_V["Rt1"]], v[_V["Rt2"]]), slack=slack, info=info)


def inner_region_for(ch: WiretapBc, aux: JointPmf) -> RateRegion:
    """Inner-bound polygon of one (Q, U1, U2, X) law, without time sharing."""
    a = aux.marginal(SIM_AXES)
    j = JointPmf(("T",) + SIM_AXES, a.table[None, ...])
    return inner_bounds(ch, j).region()


def interior_point(ch: WiretapBc, aux: JointPmf, fraction: float = 0.85,
                   lam: float = 1.0) -> tuple:
    """The inner-region vertex maximising r1 + lam*r2, scaled towards the origin."""
    if not 0 <= fraction <= 1:
        raise ValueError("fraction must lie in [0, 1]")
    reg = inner_region_for(ch, aux)
    if not reg.feasible:
        raise DesignError("the inner bound of this aux law is empty")
    h = reg.hull
    k = int(np.argmax(h[:, 0] + lam * h[:, 1]))
    return float(fraction * h[k, 0]), float(fraction * h[k, 1])


def config_for_target(ch: WiretapBc, aux: JointPmf, n: int, r1: float, r2: float,
                      **kwargs) -> SimConfig:
    d = design_rates(ch, aux, r1, r2)
    return SimConfig(ch, aux, n, d.t, d.r0_split, d.rbar, d.rtilde, **kwargs)
