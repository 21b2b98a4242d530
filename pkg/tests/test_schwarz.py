from __future__ import annotations

import pytest
import sympy

from quadtwist.arith import Discriminant
from quadtwist.maps import PolyMap, map_compose
from quadtwist.schwarz import (
    ActionBundle,
    NotFiberwiseLinearError,
    NotInvertibleError,
    build_phi,
    build_tau,
    check_defined_over_Q,
    check_equivariance,
    check_fiber_determinant,
    check_group_law,
    check_involution,
    check_linearization,
    check_sampled_identities,
    conjugate_involution,
    fiber_matrix,
    invert_fiberwise,
    phi_coefficients,
    schwarz_ring,
)

K = Discriminant(2)
a, b, x, y = sympy.symbols("a b x y")

# independent sympy transcription of the action
M_SYM = sympy.Matrix([[1 + a * b + a**2 * b**2, -(b**3)], [a**3, 1 - a * b]])
C_SYM = sympy.Matrix(
    [
        [2 * (1 + a - 2 * b - a**2 * b + 2 * a * b**2 - b**3), 2 * (1 - 2 * a + b + a * b + a**4 - 2 * a**3 * b + a**2 * b**2)],
        [-2 - a - b + a * b - b**2 + a**2 * b - b**3, 2 + b + a + a**2 + a * b - a**3 + a**2 * b - a**4 + a**2 * b**2],
    ]
)


def to_sympy(p):
    syms = {"a": a, "b": b, "x": x, "y": y}
    total = sympy.Integer(0)
    for exps, c in p.items():
        term = sympy.Rational(int(c.x.numerator), int(c.x.denominator))
        for n, e in exps.items():
            term *= syms[n] ** e
        total += term
    return total


class TestBuilders:
    def test_tau_spot_value(self):
        tau = build_tau(K)
        out = tau.evaluate({"a": 1, "b": 1, "x": 5, "y": 7})
        assert out == (K(1), K(1), K(3 * 7 - 5), K(7))

    def test_tau_matches_sympy(self):
        tau = build_tau(K)
        fiber = M_SYM * sympy.Matrix([y, x])
        assert sympy.expand(to_sympy(tau.components[2]) - fiber[0]) == 0
        assert sympy.expand(to_sympy(tau.components[3]) - fiber[1]) == 0

    def test_fiber_det_of_tau_is_one(self):
        assert sympy.expand(M_SYM.det()) == 1
        assert fiber_matrix(build_tau(K)).det == 1

    def test_det_C_is_eight(self):
        assert sympy.expand(C_SYM.det()) == 8
        assert fiber_matrix(build_phi(K)).det == 8
        (c11, c12), (c21, c22) = phi_coefficients(K)
        assert [sympy.expand(to_sympy(c) - e) for c, e in zip((c11, c12, c21, c22), C_SYM)] == [0] * 4


class TestChecks:
    @pytest.mark.parametrize("alpha", [2, 3, -1])
    def test_action_identities(self, alpha):
        F = Discriminant(alpha)
        bundle = ActionBundle.build(F)
        assert check_involution(bundle.tau).passed
        assert check_group_law(bundle.mu).passed
        assert check_equivariance(bundle.mu, bundle.tau).passed
        assert check_fiber_determinant(bundle.tau, 1).passed
        assert check_defined_over_Q(bundle.mu, bundle.tau, bundle.phi).passed

    def test_phi_is_not_an_involution(self):
        assert not check_involution(build_phi(K)).passed

    def test_equivariance_fails_for_wrong_mu(self):
        R = schwarz_ring(K)
        A, B, X, Y, L = R.gens("a", "b", "x", "y", "l")
        bad = PolyMap(R.vars, ("a", "b", "x", "y"), (L**2 * A, L**-2 * B, L * X, L**-3 * Y), "bad")
        assert not check_equivariance(bad, build_tau(K)).passed

    def test_sampled_identities(self):
        assert check_sampled_identities(K, samples=20).passed


class TestLinearization:
    def test_L_matrix(self):
        L, rep = conjugate_involution(build_phi(K), build_tau(K))
        assert rep.linear and rep.involutive and rep.diagonal_shape
        assert rep.matrix == [
            ["0", "1", "0", "0"],
            ["1", "0", "0", "0"],
            ["0", "0", "1", "0"],
            ["0", "0", "0", "-1"],
        ]

    def test_L_matches_sympy(self):
        # C * M * P * C(b,a)^-1 on the fiber, P swapping (x, y) -> (y, x)
        P = sympy.Matrix([[0, 1], [1, 0]])
        swapped = C_SYM.subs({a: b, b: a}, simultaneous=True)
        fiber = sympy.simplify(swapped * M_SYM * P * C_SYM.inv())
        assert fiber == sympy.Matrix([[1, 0], [0, -1]])

    def test_check_records_det(self):
        res = check_linearization(build_phi(K), build_tau(K))
        assert res.passed and res.details["det_C"] == "8"

    def test_nonlinear_conjugate_reported(self):
        ident = PolyMap.identity(K, build_tau(K).vars, ("a", "b", "x", "y"))
        _, rep = conjugate_involution(ident, build_tau(K))
        assert not rep.linear and rep.nonlinear_terms

    def test_inverse_round_trip(self):
        phi = build_phi(K)
        assert map_compose(phi, invert_fiberwise(phi)).is_identity()

    def test_inverse_errors(self):
        R = schwarz_ring(K)
        A, B, X, Y = R.gens("a", "b", "x", "y")
        with pytest.raises(NotInvertibleError):
            invert_fiberwise(PolyMap(R.vars, ("a", "b", "x", "y"), (A, B, A * X, Y)))
        with pytest.raises(NotFiberwiseLinearError):
            invert_fiberwise(PolyMap(R.vars, ("a", "b", "x", "y"), (A, B, X * X, Y)))
        with pytest.raises(NotFiberwiseLinearError):
            invert_fiberwise(build_tau(K))
