"""Superoperator assembly checked against a direct right-hand-side evaluation."""

import math

import numpy as np
import pytest

import mirrorqed as mq
from mirrorqed.liouvillian import (
    PROJ_E,
    SIGMA_MINUS,
    SIGMA_PLUS,
    _lmul,
    _rmul,
    _sandwich,
)
from mirrorqed.units import RAD_S_TO_RAD_NS

WG = mq.WaveguideSpec()


def make_spec(**kw):
    base = dict(label="l", ec=0.324, ejmax=40.0, beta=0.717, x=0.0, gamma_phi=0.0)
    base.update(kw)
    return mq.TransmonSpec(**base)


def random_rho(dim, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def direct_rhs(point, probe, coupl, rho):
    """Evaluate the master equation term by term on a density matrix.

    Deliberately written with embedded dense operators and matrix products,
    sharing no code path with the kron-based generator.
    """
    n = point.n_atoms
    sm = [mq.embed(np.array(SIGMA_MINUS, complex), i, n) for i in range(n)]
    sp = [mq.embed(np.array(SIGMA_PLUS, complex), i, n) for i in range(n)]
    pe = [mq.embed(np.array(PROJ_E, complex), i, n) for i in range(n)]
    sx = [sp[i] + sm[i] for i in range(n)]
    kp = probe.omega_p / point.wg.v
    s = RAD_S_TO_RAD_NS

    out = np.zeros_like(rho)
    for i in range(n):
        delta_i = mq.probe_detuning(i, point, probe) * s
        out += 1j * delta_i * (sp[i] @ sm[i] @ rho - rho @ sp[i] @ sm[i])
        omega_i = mq.rabi_frequency(point.specs[i], probe, point.fluxes[i], WG) * s
        amp = omega_i * math.cos(kp * point.specs[i].x)
        out += 1j * amp * (sx[i] @ rho - rho @ sx[i])
        gphi = point.specs[i].gamma_phi * s
        out += gphi * (2.0 * pe[i] @ rho @ pe[i] - pe[i] @ rho - rho @ pe[i])
    for i in range(n):
        for j in range(n):
            if i != j:
                c = (coupl.delta_plus[i, j] - 1j * coupl.gamma_minus[i, j]) * s
                op = sp[i] @ sm[j]
                out += -1j * c * (op @ rho - rho @ op)
            d = (coupl.gamma_plus[i, j] + 1j * coupl.delta_minus[i, j]) * s
            anti = sp[i] @ sm[j]
            out += d * (2.0 * sm[j] @ rho @ sp[i] - anti @ rho - rho @ anti)
    return out


class TestVectorization:
    def test_column_stacking_order(self):
        v = mq.vectorize(np.array([[1.0, 2.0], [3.0, 4.0]]))
        assert np.array_equal(v, np.array([1.0, 3.0, 2.0, 4.0]))
        vi = mq.vectorize(np.eye(2))
        assert np.array_equal(vi, np.array([1.0, 0.0, 0.0, 1.0]))

    def test_roundtrip(self):
        rho = random_rho(4, 11)
        assert np.array_equal(mq.devectorize(mq.vectorize(rho)), rho)

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            mq.vectorize(np.ones((2, 3)))
        with pytest.raises(ValueError):
            mq.devectorize(np.ones(3))
        with pytest.raises(ValueError):
            mq.devectorize(np.ones((2, 2)))

    def test_multiplication_superoperators(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        rho = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        assert np.allclose(
            mq.devectorize(_lmul(a) @ mq.vectorize(rho)), a @ rho
        )
        assert np.allclose(
            mq.devectorize(_rmul(b) @ mq.vectorize(rho)), rho @ b
        )
        assert np.allclose(
            mq.devectorize(_sandwich(a, b) @ mq.vectorize(rho)), a @ rho @ b
        )


class TestEmbed:
    def test_matches_manual_kron(self):
        op = np.array(SIGMA_MINUS, complex)
        expected = np.kron(np.eye(2), np.kron(op, np.eye(2)))
        assert np.array_equal(mq.embed(op, 1, 3), expected)

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            mq.embed(np.eye(2), 2, 2)
        with pytest.raises(IndexError):
            mq.embed(np.eye(2), -1, 2)

    def test_rejects_non_qubit_operator(self):
        with pytest.raises(ValueError):
            mq.embed(np.eye(3), 0, 2)


class TestGenerator:
    def build(self, n_atoms=2, v0=2.6e-10, probe_ghz=4.74, detuned=False):
        freqs = [4.75, 4.75] if not detuned else [4.68, 4.81]
        specs = [
            make_spec(label="a", ec=0.324, beta=0.81, x=33e-3,
                      gamma_phi=2e6 * math.pi * 2.3),
            make_spec(label="b", ec=0.406, beta=0.766, x=0.0,
                      gamma_phi=2e6 * math.pi * 2.785),
        ][:n_atoms]
        point = mq.OperatingPoint.at_frequencies(specs, freqs[:n_atoms], WG)
        probe = mq.ProbeSpec(omega_p=2e9 * math.pi * probe_ghz, v0=v0)
        coupl = mq.symmetrize(point)
        return point, probe, coupl

    def test_matches_direct_rhs(self):
        for detuned in (False, True):
            point, probe, coupl = self.build(detuned=detuned)
            gen = mq.build_generator(point, probe, coupl)
            rho = random_rho(4, 7 if detuned else 5)
            via_matrix = mq.devectorize(gen.matrix @ mq.vectorize(rho))
            direct = direct_rhs(point, probe, coupl, rho)
            scale = np.abs(direct).max()
            assert np.abs(via_matrix - direct).max() <= 1e-12 * scale

    def test_trace_is_conserved(self):
        point, probe, coupl = self.build()
        gen = mq.build_generator(point, probe, coupl)
        trace_row = mq.vectorize(np.eye(gen.dim)) @ gen.matrix
        assert np.abs(trace_row).max() <= 1e-12

    def test_preserves_hermiticity(self):
        point, probe, coupl = self.build()
        gen = mq.build_generator(point, probe, coupl)
        rho = random_rho(4, 19)
        drho = mq.devectorize(gen.matrix @ mq.vectorize(rho))
        assert np.abs(drho - drho.conj().T).max() <= 1e-12 * np.abs(drho).max()

    def test_metadata(self):
        point, probe, coupl = self.build()
        gen = mq.build_generator(point, probe, coupl)
        assert gen.n_atoms == 2
        assert gen.dim == 4
        assert gen.matrix.shape == (16, 16)
        assert gen.convention == "column-stacking"

    def test_register_capacity(self):
        specs = [make_spec(label=f"q{i}", x=i * 1e-3) for i in range(9)]
        point = mq.OperatingPoint.at_frequencies(specs, [4.5] * 9, WG)
        probe = mq.ProbeSpec(omega_p=2e9 * math.pi * 4.5, v0=1e-10)
        coupl = mq.symmetrize(point)
        with pytest.raises(mq.RegisterCapacityError):
            mq.build_generator(point, probe, coupl)

    def test_decoupled_atom_ignores_drive_amplitude(self):
        spec = make_spec(beta=0.0, gamma_phi=2e6 * math.pi)
        point = mq.OperatingPoint.at_frequencies([spec], [4.5], WG)
        coupl = mq.symmetrize(point)
        gens = []
        for v0 in (1e-12, 1e-3):
            probe = mq.ProbeSpec(omega_p=2e9 * math.pi * 4.5, v0=v0)
            gens.append(mq.build_generator(point, probe, coupl))
        assert np.array_equal(gens[0].matrix, gens[1].matrix)
