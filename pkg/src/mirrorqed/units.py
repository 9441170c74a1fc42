"""Unit conventions and physical constants.

Public interfaces label their units explicitly: energies as frequencies in
GHz (meaning E/h), rates and angular frequencies in rad/s, lengths in
meters, velocities in m/s. Internally the generator and integrator work in
rad/ns and mm so that matrix entries stay O(1)-O(10).
"""

from __future__ import annotations

import math

from scipy import constants as _const

E_CHARGE = _const.e          # C
PLANCK_H = _const.h          # J s
HBAR = _const.hbar           # J s

TWO_PI = 2.0 * math.pi

# 1 GHz of ordinary frequency equals 2*pi rad/ns of angular frequency.
GHZ_TO_RAD_NS = TWO_PI
RAD_S_TO_RAD_NS = 1e-9
M_TO_MM = 1e3
M_PER_S_TO_MM_PER_NS = 1e-6


def ghz_to_rad_s(f_ghz: float) -> float:
    return TWO_PI * 1e9 * f_ghz


def rad_s_to_ghz(omega: float) -> float:
    return omega / (TWO_PI * 1e9)


def mhz_to_rad_s(f_mhz: float) -> float:
    return TWO_PI * 1e6 * f_mhz


def rad_s_to_mhz(omega: float) -> float:
    return omega / (TWO_PI * 1e6)
