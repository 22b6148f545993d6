import numpy as np
import pytest

from pathcomplete.graph import LabeledGraph, expand, gstar
from pathcomplete.lyapunov import (
    MinMaxFunction,
    PieceError,
    Pieces,
    check_decrease,
    check_feasible_numeric,
    derived_max_inequality,
    derived_min_inequality,
    evaluate,
    expand_pieces,
    induced_clf,
    induced_dual_clf,
    quadratic_form,
    sphere_points,
    sum_function,
)
from pathcomplete.systems import SwitchedLinearSystem

S = frozenset


def diag_pieces(**kw):
    return Pieces({k: np.diag(v) for k, v in kw.items()})


class TestPieces:
    def test_validation(self):
        with pytest.raises(PieceError):
            quadratic_form([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(PieceError):
            quadratic_form([[1.0, 0.0], [0.0, -1.0]])
        with pytest.raises(PieceError):
            Pieces({"a": np.eye(2), "b": np.eye(3)})
        with pytest.raises(PieceError):
            diag_pieces(a=[1, 1])["b"]
        assert quadratic_form([[0.0, 0.0], [0.0, 1.0]], require_pd=False).shape == (2, 2)

    def test_round_trip(self, tmp_path):
        p = diag_pieces(a=[1, 2], b=[3, 4])
        p.save(tmp_path / "p.json")
        q = Pieces.load(tmp_path / "p.json")
        assert list(q) == ["a", "b"]
        assert np.array_equal(q["b"], np.diag([3.0, 4.0]))


class TestEvaluation:
    def test_example_function(self, observer_example):
        p = diag_pieces(a=[1, 9], b=[2, 2], c=[3, 1], d=[4, 1])
        f = induced_clf(observer_example, p)
        assert set(f.subsets) == {S("acd"), S("bd")}
        assert f.describe() == "min{max(V_b, V_d), max(V_a, V_c, V_d)}"
        x = np.array([1.0, 0.0])
        assert f(x) == pytest.approx(min(max(1, 3, 4), max(2, 4)))
        y = np.array([0.0, 1.0])
        assert f(y) == pytest.approx(min(max(9, 1, 1), max(2, 1)))

    def test_vectorized_matches_pointwise(self, rng, observer_example):
        p = Pieces({k: (lambda m: m @ m.T + np.eye(3))(rng.standard_normal((3, 3))) for k in "abcd"})
        f = induced_clf(observer_example, p)
        x = rng.standard_normal((20, 3))
        assert np.allclose(evaluate(f, x), [f(r) for r in x])
        with pytest.raises(PieceError):
            f(np.ones(2))

    def test_polarity_and_sum(self):
        p = diag_pieces(a=[1, 1], b=[2, 2])
        g = LabeledGraph(1, "ab", [("a", "b", 1), ("b", "a", 1)])
        x = np.array([1.0, 0.0])
        assert sum_function(g, p)(x) == pytest.approx(3.0)
        assert sum_function(g, p).describe() == "V_a + V_b"
        assert MinMaxFunction((S("a"), S("b")), p, "max-min")(x) == pytest.approx(2.0)
        with pytest.raises(ValueError):
            MinMaxFunction((S("a"),), p, "median")
        with pytest.raises(PieceError):
            MinMaxFunction((S("c"),), p)

    def test_dual_function_on_gstar(self):
        p = diag_pieces(a=[1, 2])
        f = induced_dual_clf(gstar(2), p)
        assert f.polarity == "max-min" and f.subsets == (S("a"),)

    def test_sphere_points(self):
        x = sphere_points(3, 1000, seed=4)
        assert x.shape == (1000, 3)
        assert np.allclose(np.linalg.norm(x, axis=1), 1.0)
        assert np.array_equal(x, sphere_points(3, 1000, seed=4))


class TestFeasibility:
    def test_contraction(self):
        sys = SwitchedLinearSystem([0.5 * np.eye(2), np.diag([0.9, -0.3])])
        p = diag_pieces(a=[1, 1])
        rep = check_feasible_numeric(gstar(2), p, sys)
        assert rep.feasible and not rep.failing
        bad = SwitchedLinearSystem([0.5 * np.eye(2), np.diag([1.1, 0.0])])
        rep = check_feasible_numeric(gstar(2), p, bad)
        assert not rep.feasible
        assert [e.label for e in rep.failing] == [(2,)]

    def test_word_label_uses_product(self):
        a1 = np.array([[0.0, 2.0], [0.0, 0.0]])  # nilpotent: A1 A1 = 0
        sys = SwitchedLinearSystem([a1])
        g = LabeledGraph(1, "a", [("a", "a", [1, 1])])
        assert check_feasible_numeric(g, diag_pieces(a=[1, 1]), sys).feasible
        g1 = LabeledGraph(1, "a", [("a", "a", 1)])
        assert not check_feasible_numeric(g1, diag_pieces(a=[1, 1]), sys).feasible

    def test_expand_pieces_stay_feasible(self, rng):
        g = LabeledGraph(2, "ab", [("a", "a", 1), ("a", "b", [2, 1]), ("b", "a", [2, 2]), ("b", "b", 1)])
        sys = SwitchedLinearSystem([0.4 * rng.standard_normal((2, 2)) for _ in range(2)])
        p = diag_pieces(a=[1, 1], b=[1, 1])
        ge, pe = expand_pieces(g, p, sys)
        assert ge == expand(g)
        word = "a_b_2-1_2"
        a1 = sys.matrix(1)
        assert np.allclose(pe[word], a1.T @ p["b"] @ a1)
        if check_feasible_numeric(g, p, sys).feasible:
            assert check_feasible_numeric(ge, pe, sys).feasible

    def test_expand_pieces_three_letter_word(self):
        sys = SwitchedLinearSystem([0.5 * np.eye(2), np.array([[0.2, 0.1], [0.0, 0.3]])])
        g = LabeledGraph(2, "ab", [("a", "b", [1, 2, 2]), ("b", "a", 1), ("b", "b", 2)])
        p = diag_pieces(a=[1, 1], b=[2, 2])
        ge, pe = expand_pieces(g, p, sys)
        a2 = sys.matrix(2)
        assert np.allclose(pe["a_b_1-2-2_2"], (a2 @ a2).T @ p["b"] @ (a2 @ a2))
        assert np.allclose(pe["a_b_1-2-2_3"], a2.T @ p["b"] @ a2)
        assert check_feasible_numeric(g, p, sys).feasible
        assert check_feasible_numeric(ge, pe, sys).feasible


class TestDecrease:
    def test_detects_growth(self):
        sys = SwitchedLinearSystem([np.diag([1.2, 0.5])])
        f = sum_function(gstar(1), diag_pieces(a=[1, 1]))
        rep = check_decrease(f, sys, 500)
        assert not rep.ok and rep.witness is not None
        assert rep.worst == pytest.approx(0.44, rel=1e-2)

    def test_contraction_passes(self):
        sys = SwitchedLinearSystem([0.9 * np.eye(3)])
        rep = check_decrease(sum_function(gstar(1), diag_pieces(a=[1, 2, 3])), sys, 1000)
        assert rep.ok and rep.worst == pytest.approx(0.81 - 1)

    def test_explicit_samples(self):
        sys = SwitchedLinearSystem([np.eye(2)])
        f = sum_function(gstar(1), diag_pieces(a=[1, 1]))
        rep = check_decrease(f, sys, np.array([[1.0, 0.0], [0.0, 2.0]]))
        assert rep.samples == 2 and rep.ok


class TestDerivedInequalities:
    def setup_method(self):
        # mode 1 edges a->b, c->b; a rotation-free contraction makes all edges valid
        self.g = LabeledGraph(1, "abc", [("a", "b", 1), ("c", "b", 1), ("b", "a", 1)])
        self.sys = SwitchedLinearSystem([0.3 * np.eye(2)])
        self.p = diag_pieces(a=[1, 2], b=[2, 1], c=[1, 3])

    def test_min_form(self):
        r = derived_min_inequality(self.g, self.p, self.sys, "ac", "b", 1, samples=2000)
        assert r.hypothesis and r.verified
        assert not derived_min_inequality(self.g, self.p, self.sys, "b", "c", 1)

    def test_max_form(self):
        r = derived_max_inequality(self.g, self.p, self.sys, "ab", "ab", 1, samples=2000)
        assert r.hypothesis and r.verified
        assert not derived_max_inequality(self.g, self.p, self.sys, "a", "c", 1)
