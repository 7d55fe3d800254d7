import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oqnet.analysis import (
    coherence_decay_fit,
    decompose_steady_state,
    exchange_coherences,
    g2_extract,
    product_of_singles,
    similarity,
)
from oqnet.errors import ValidationError
from oqnet.master import build_single_liouvillian, build_two_liouvillian, integrate, steady_state
from oqnet.network import NetworkSpec, paper_trimer
from oqnet.records import pair_index
from oqnet.states import KINDS, InitialStateKind, make_initial, pure_two_particle, single_excitation

P = lambda p, q: pair_index(p, q, 3)  # noqa: E731


def nonzero_entries(rho):
    return {(int(i), int(j)): rho[i, j] for i, j in zip(*np.nonzero(np.abs(rho) > 1e-15))}


def test_separable_boson_entries():
    rho = make_initial("separable_boson", 3, (0, 1))
    idx = [P(0, 1), P(1, 0)]
    assert nonzero_entries(rho) == pytest.approx({(i, j): 0.5 for i in idx for j in idx})


def test_path_entangled_entries():
    rho = make_initial("path_entangled_boson", 3, (0, 1))
    idx = [P(0, 0), P(1, 1)]
    assert nonzero_entries(rho) == pytest.approx({(i, j): 0.5 for i in idx for j in idx})


def test_path_entangled_minus_variant():
    rho = make_initial("path_entangled_boson_minus", 3, (0, 1))
    assert rho[P(0, 0), P(1, 1)] == pytest.approx(-0.5)


def test_classically_correlated_entries():
    rho = make_initial("classically_correlated", 3, (0, 1))
    assert nonzero_entries(rho) == pytest.approx({(P(0, 0), P(0, 0)): 0.5, (P(1, 1), P(1, 1)): 0.5})


def test_incoherent_entries():
    rho = make_initial("incoherent_distinguishable", 3, (0, 1))
    assert nonzero_entries(rho) == pytest.approx({(P(0, 1), P(0, 1)): 0.5, (P(1, 0), P(1, 0)): 0.5})


def test_separable_fermion_entries():
    rho = make_initial("separable_fermion", 3, (0, 1))
    assert rho[P(0, 1), P(1, 0)] == pytest.approx(-0.5)
    assert rho[P(0, 1), P(0, 1)] == pytest.approx(0.5)


@pytest.mark.parametrize("kind", ["separable_fermion", "path_entangled_boson"])
def test_coincident_sites_rejected(kind):
    with pytest.raises(ValidationError):
        make_initial(kind, 3, (1, 1))


def test_out_of_range_and_unknown():
    with pytest.raises(ValidationError):
        make_initial("separable_boson", 3, (0, 3))
    with pytest.raises(ValidationError):
        make_initial("squeezed", 3)
    with pytest.raises(ValidationError):
        make_initial("custom", 3)


@given(st.sampled_from([k for k in KINDS if k != "custom"]), st.integers(0, 3), st.integers(0, 3))
def test_builtin_states_are_physical(kind, a, b):
    if a == b and kind in ("separable_fermion", "path_entangled_boson", "path_entangled_boson_minus"):
        return
    rho = make_initial(kind, 4, (a, b))
    assert np.allclose(rho, rho.conj().T)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(rho)[0] >= -1e-12


def test_custom_state_checked():
    good = make_initial("path_entangled_boson_minus", 3, (0, 2))
    assert np.array_equal(make_initial(InitialStateKind("custom", matrix=good), 3), good)
    with pytest.raises(ValidationError):
        make_initial(InitialStateKind("custom", matrix=2 * good), 3)
    with pytest.raises(ValidationError):
        make_initial(InitialStateKind("custom", matrix=np.eye(4) / 4), 3)
    bad = np.diag([1.5, -0.5] + [0.0] * 7)
    with pytest.raises(ValidationError):
        make_initial(InitialStateKind("custom", matrix=bad), 3)


def test_pure_two_particle_requires_amplitude():
    with pytest.raises(ValidationError):
        pure_two_particle({}, 3)


def test_g2_at_launch():
    g2 = g2_extract(make_initial("separable_boson", 3, (0, 1)))
    expected = np.zeros((3, 3))
    expected[0, 1] = expected[1, 0] = 0.5
    np.testing.assert_allclose(g2, expected, atol=1e-15)


def test_g2_fermion_no_bunching():
    ss = steady_state(build_two_liouvillian(paper_trimer("quantum")), "fermion")
    g2 = g2_extract(ss.rho)
    np.testing.assert_allclose(np.diag(g2), 0, atol=1e-12)
    assert g2.sum() == pytest.approx(1.0, abs=1e-8)
    np.testing.assert_allclose(g2, g2.T, atol=1e-12)


def test_g2_rejects_complex_diagonal():
    rho = np.eye(4, dtype=complex) / 4
    rho[0, 0] += 1e-6j
    with pytest.raises(ValidationError):
        g2_extract(rho)
    with pytest.raises(ValidationError):
        g2_extract(np.eye(3))


def test_similarity_extremes():
    a = np.array([[0.2, 0.1], [0.1, 0.6]])
    assert similarity(a, a) == pytest.approx(1.0)
    assert similarity(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == 0.0
    with pytest.raises(ValidationError):
        similarity(np.zeros((2, 2)), a)
    with pytest.raises(ValidationError):
        similarity(-a, a)


matrices = arrays(float, (3, 3), elements=st.floats(0.0, 10.0)).filter(lambda m: m.sum() > 1e-3)


@given(matrices, matrices, st.floats(0.01, 100), st.floats(0.01, 100))
def test_similarity_symmetric_and_scale_invariant(a, b, s, t):
    base = similarity(a, b)
    assert 0.0 <= base <= 1.0 + 1e-12
    assert similarity(b, a) == pytest.approx(base, rel=1e-12, abs=1e-15)
    assert similarity(s * a, t * b) == pytest.approx(base, rel=1e-9, abs=1e-12)


def test_decay_fit_single_pair():
    spec = NetworkSpec([0.2, -0.3], [[0, 0], [0, 0]], gamma=[1.0, 1.0])
    rho0 = np.full((2, 2), 0.5, dtype=complex)
    rec = integrate(build_single_liouvillian(spec), rho0, np.linspace(0, 5, 26))
    fit = coherence_decay_fit(rec, (0, 1))
    assert fit.rate == pytest.approx(1.0, rel=0.01)
    assert fit.frequency == pytest.approx(0.5, rel=1e-9)


def test_decay_fit_two_particle_elements():
    spec = paper_trimer("quantum").without_coupling()
    rng = np.random.default_rng(4)
    a = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
    rho0 = a @ a.conj().T
    rho0 /= np.trace(rho0)
    rec = integrate(build_two_liouvillian(spec), rho0, np.linspace(0, 3, 31))
    g = spec.gamma
    assert abs(coherence_decay_fit(rec, ((0, 1), (1, 0))).rate) <= 1e-6
    fit = coherence_decay_fit(rec, ((0, 1), (0, 2)))
    assert fit.rate == pytest.approx((g[1] + g[2]) / 2, rel=0.01)
    assert fit.rate == pytest.approx(1.265, abs=1e-3)


def test_decay_fit_errors():
    spec = paper_trimer("quantum").without_coupling()
    rec = integrate(build_single_liouvillian(spec), single_excitation(0, 3), np.linspace(0, 1, 11))
    with pytest.raises(ValidationError):
        coherence_decay_fit(rec, (0, 1))
    short = integrate(build_single_liouvillian(spec), single_excitation(0, 3), np.linspace(0, 1, 5))
    with pytest.raises(ValidationError):
        coherence_decay_fit(short, (0, 0))


def test_boson_steady_state_decomposition():
    ss = steady_state(build_two_liouvillian(paper_trimer("quantum")), "boson")
    d = decompose_steady_state(ss.rho)
    assert d.residual <= 1e-8
    assert d.mix_weight == pytest.approx(0.5, abs=1e-10)
    for w in d.sep_weights.values():
        assert w == pytest.approx(1 / 6, abs=1e-10)
    for c in d.sep_coherences.values():
        assert c == pytest.approx(1 / 12, abs=1e-10)
    np.testing.assert_allclose(d.reconstruct(), ss.rho, atol=1e-10)


def test_decomposition_reconstructs_any_state():
    rng = np.random.default_rng(6)
    a = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
    d = decompose_steady_state(a)
    np.testing.assert_allclose(d.reconstruct(), a, atol=1e-14)
    assert d.residual > 0


def test_lifted_uniform_mixture_has_no_exchange_part():
    lifted = np.diag(np.kron(np.ones(3) / 3, np.ones(3) / 3)).astype(complex)
    d = decompose_steady_state(lifted)
    assert all(abs(c) == 0 for c in d.sep_coherences.values())


def test_incoherent_input_steady_state_exchange_coherence():
    # the incoherent pair is half symmetric and half antisymmetric, so its
    # stationary exchange coherence is (1/12 - 1/6) / 2
    L = build_two_liouvillian(paper_trimer("quantum"))
    rho = steady_state(L, "distinguishable", make_initial("incoherent_distinguishable", 3, (0, 1))).rho
    np.testing.assert_allclose(exchange_coherences(rho, 3), 1 / 24, atol=1e-10)
    assert rho[P(0, 1), P(1, 0)].real == pytest.approx(-1 / 24, abs=1e-10)


def test_universality_at_long_distance():
    L = build_two_liouvillian(paper_trimer("quantum"))
    finals = [integrate(L, make_initial(k, 3, (0, 1)), [0, 50, 100]).final
              for k in ("separable_boson", "path_entangled_boson", "classically_correlated")]
    for a, b in itertools.combinations(finals, 2):
        assert np.linalg.norm(a - b) <= 1e-4


def test_product_of_singles():
    e = [single_excitation(k, 3) for k in range(3)]
    prod = product_of_singles(e[0], e[1])
    assert nonzero_entries(prod) == {(P(0, 1), P(0, 1)): 1.0}
    assert np.trace(product_of_singles(np.eye(3) / 3, e[2])).real == pytest.approx(1.0)
    ss = steady_state(build_single_liouvillian(paper_trimer("classical")), "single").rho
    np.testing.assert_allclose(product_of_singles(ss, ss), np.eye(9) / 9, atol=1e-12)
    with pytest.raises(ValidationError):
        product_of_singles(np.eye(2), np.eye(3))
