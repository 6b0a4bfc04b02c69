"""Collective angular-momentum operators for a spin-j system.

All matrices live in the J_z eigenbasis ordered by ascending m
(m = -j, -j+1, ..., +j). Every other module relies on this ordering.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class SpinBasis:
    j: float
    dim: int = field(init=False)
    m_values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        two_j = 2 * self.j
        if self.j < 0 or abs(two_j - round(two_j)) > 1e-12:
            raise ValueError(f"j must be a non-negative integer or half-integer, got {self.j!r}")
        object.__setattr__(self, "j", round(two_j) / 2)
        object.__setattr__(self, "dim", round(two_j) + 1)
        m = np.arange(self.dim, dtype=float) - self.j
        m.setflags(write=False)
        object.__setattr__(self, "m_values", m)

    @property
    def n_qubits(self) -> int:
        return self.dim - 1


def build_basis(j) -> SpinBasis:
    """Return the basis for spin ``j``; accepts floats, ints, Fractions or strings like ``"1/2"``."""
    if isinstance(j, str):
        j = Fraction(j)
    return SpinBasis(float(j))


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=64)
def _ops(j: float):
    basis = SpinBasis(j)
    m = basis.m_values
    # J_+|m> = sqrt(j(j+1) - m(m+1)) |m+1>; |m+1> sits one row below |m>
    coeff = np.sqrt(np.clip(j * (j + 1) - m[:-1] * (m[:-1] + 1), 0.0, None))
    jp = np.diag(coeff, k=-1).astype(complex)
    jm = jp.conj().T.copy()
    jz_ = np.diag(m).astype(complex)
    jx_ = 0.5 * (jp + jm)
    jy_ = -0.5j * (jp - jm)
    return {
        "z": _frozen(jz_),
        "+": _frozen(jp),
        "-": _frozen(jm),
        "x": _frozen(jx_),
        "y": _frozen(jy_),
        "xx": _frozen(jx_ @ jx_),
        "parity": _frozen(np.diag(np.where(np.round(m + j).astype(int) % 2 == 0, 1.0, -1.0)).astype(complex)),
    }


def jz(basis: SpinBasis) -> np.ndarray:
    return _ops(basis.j)["z"]


def jplus(basis: SpinBasis) -> np.ndarray:
    return _ops(basis.j)["+"]


def jminus(basis: SpinBasis) -> np.ndarray:
    return _ops(basis.j)["-"]


def jx(basis: SpinBasis) -> np.ndarray:
    return _ops(basis.j)["x"]


def jy(basis: SpinBasis) -> np.ndarray:
    return _ops(basis.j)["y"]


def jx_squared(basis: SpinBasis) -> np.ndarray:
    return _ops(basis.j)["xx"]


def parity(basis: SpinBasis) -> np.ndarray:
    """Diagonal parity exp(i*pi*(J_z + j)), entries +1/-1."""
    return _ops(basis.j)["parity"]


def identity(basis: SpinBasis) -> np.ndarray:
    return np.eye(basis.dim, dtype=complex)
