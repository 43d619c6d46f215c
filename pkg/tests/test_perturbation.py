import numpy as np
import pytest

from robustgf.errors import CapExceeded, DegenerateSpectrum
from robustgf.graph import Graph, eigendecompose, laplacian, generate_sbm
from robustgf.oracle import exact_perturbed_eigs
from robustgf.perturbation import (
    FirstOrderCorrections,
    PerturbationModel,
    PerturbedEdge,
    Realization,
    approx_perturbed_eigs,
    delta_laplacian,
    empty_realization,
    enumerate_realizations,
    first_order_eigen,
    full_realization,
    model_from_json,
    model_to_json,
    sample_realization,
)

from helpers import path3, path_with_chord_model, random_model, triangle


# --- model invariants --------------------------------------------------------

def test_model_rejects_removing_absent_edge():
    with pytest.raises(ValueError):
        PerturbationModel(path3(), (PerturbedEdge((1, 3), -1, 0.5),))


def test_model_rejects_adding_existing_edge():
    with pytest.raises(ValueError):
        PerturbationModel(path3(), (PerturbedEdge((1, 2), +1, 0.5),))


def test_model_rejects_duplicate_edge():
    with pytest.raises(ValueError):
        PerturbationModel(path3(), (
            PerturbedEdge((1, 2), -1, 0.5),
            PerturbedEdge((1, 2), -1, 0.5),
        ))


def test_perturbed_edge_validation():
    with pytest.raises(ValueError):
        PerturbedEdge((1, 2), 2, 0.5)
    with pytest.raises(ValueError):
        PerturbedEdge((1, 2), 1, 1.5)
    with pytest.raises(ValueError):
        PerturbedEdge((2, 1), 1, 0.5)


def test_model_json_roundtrip():
    graph = path3()
    model = PerturbationModel(graph, (
        PerturbedEdge((1, 3), +1, 0.25),
        PerturbedEdge((1, 2), -1, 0.75),
    ))
    text = model_to_json(model)
    assert model_from_json(graph, text) == model


# --- delta laplacian ----------------------------------------------------------

def test_delta_laplacian_single_chord():
    graph, _, model = path_with_chord_model()
    dl = delta_laplacian(model, full_realization(model))
    assert np.array_equal(dl, np.array([[1, 0, -1], [0, 0, 0], [-1, 0, 1]], dtype=float))


def test_delta_laplacian_empty_realization():
    _, _, model = path_with_chord_model()
    assert np.array_equal(delta_laplacian(model, empty_realization(model)), np.zeros((3, 3)))


# --- first-order corrections ---------------------------------------------------

def test_first_order_path_chord_eigenvalue_shift():
    # hand evaluation: u_2 = (1, 0, -1)/sqrt(2) across the chord gives 2;
    # the constant mode and u_3 = (1, -2, 1)/sqrt(6) give 0
    _, eig, model = path_with_chord_model()
    corr = first_order_eigen(eig, model)
    assert np.allclose(corr.q[:, 0], [0.0, 2.0, 0.0], atol=1e-12)
    assert np.allclose(corr.delta_lambda, [0.0, 2.0, 0.0], atol=1e-12)


def test_first_order_path_chord_eigenvector_terms_vanish():
    # every cross term u_j . b vanishes for j != 2, so all corrections are zero
    _, eig, model = path_with_chord_model()
    corr = first_order_eigen(eig, model)
    assert np.max(np.abs(corr.delta_u)) < 1e-12


def test_first_order_triangle_degenerate():
    eig = eigendecompose(laplacian(triangle()))
    model = PerturbationModel(triangle(), (PerturbedEdge((1, 2), -1, 0.5),))
    with pytest.raises(DegenerateSpectrum):
        first_order_eigen(eig, model)


def test_constant_mode_row_is_zero():
    rng = np.random.default_rng(5)
    graph = generate_sbm(8, 0.7, 0.15, seed=9)
    eig = eigendecompose(laplacian(graph))
    model = random_model(graph, rng, 5)
    corr = first_order_eigen(eig, model)
    assert np.max(np.abs(corr.q[0, :])) < 1e-12
    assert np.max(np.abs(corr.delta_u[:, :, 0])) < 1e-12


def test_delta_u_orthogonal_to_own_mode():
    rng = np.random.default_rng(11)
    checked = 0
    seed = 0
    while checked < 5:
        seed += 1
        graph = generate_sbm(8, 0.7, 0.15, seed=seed)
        eig = eigendecompose(laplacian(graph))
        if eig.spectral_gap_min < 1e-6:
            continue
        checked += 1
        model = random_model(graph, rng, 4)
        corr = first_order_eigen(eig, model)
        # delta_u[m][:, i] is spanned by the other modes only
        overlaps = np.einsum("ni,mni->mi", eig.eigenvectors, corr.delta_u)
        assert np.max(np.abs(overlaps)) < 1e-10


# --- approximate perturbed eigenpairs -------------------------------------------

def test_approx_path_chord_matches_exact_triangle():
    graph, eig, model = path_with_chord_model()
    corr = first_order_eigen(eig, model)
    approx = approx_perturbed_eigs(eig, corr, full_realization(model))
    assert np.allclose(approx.lambda_tilde, [0.0, 3.0, 3.0], atol=1e-10)
    exact = exact_perturbed_eigs(graph, model, full_realization(model))
    assert np.allclose(approx.lambda_tilde, exact.eigenvalues, atol=1e-10)


def test_approx_empty_realization_unchanged():
    _, eig, model = path_with_chord_model()
    corr = first_order_eigen(eig, model)
    approx = approx_perturbed_eigs(eig, corr, empty_realization(model))
    assert np.array_equal(approx.lambda_tilde, eig.eigenvalues)
    assert np.array_equal(approx.u_tilde, eig.eigenvectors)
    assert not approx.has_negative


def test_approx_eigenvalues_stay_nonnegative_for_graph_toggles():
    # first-order eigenvalues are quadratic forms of the exactly perturbed
    # Laplacian, which is PSD for any valid toggle pattern
    rng = np.random.default_rng(3)
    checked = 0
    seed = 0
    while checked < 5:
        seed += 1
        graph = generate_sbm(6, 0.8, 0.2, seed=seed)
        eig = eigendecompose(laplacian(graph))
        if eig.spectral_gap_min < 1e-6:
            continue
        checked += 1
        model = random_model(graph, rng, 6)
        corr = first_order_eigen(eig, model)
        for _ in range(10):
            real = sample_realization(model, rng)
            approx = approx_perturbed_eigs(eig, corr, real)
            assert approx.lambda_tilde.min() > -1e-10
            assert not approx.has_negative


def test_negative_flag_fires_on_synthetic_corrections():
    eig = eigendecompose(laplacian(path3()))
    corr = FirstOrderCorrections(
        q=np.array([[0.0], [2.0], [0.0]]),
        delta_u=np.zeros((1, 3, 3)),
        delta_lambda=np.array([0.0, -2.0, 0.0]),
        sigma=np.array([-1.0]),
        probs=np.array([1.0]),
    )
    approx = approx_perturbed_eigs(eig, corr, Realization(np.array([True])))
    assert approx.has_negative
    assert approx.lambda_tilde[1] == pytest.approx(-1.0)


# --- sampling and enumeration ----------------------------------------------------

def test_sample_all_or_nothing():
    graph = path3()
    always = PerturbationModel(graph, (PerturbedEdge((1, 3), +1, 1.0),))
    never = PerturbationModel(graph, (PerturbedEdge((1, 3), +1, 0.0),))
    rng = np.random.default_rng(0)
    assert sample_realization(always, rng).active.all()
    assert not sample_realization(never, rng).active.any()


def test_sample_frequency_matches_probability():
    graph = path3()
    model = PerturbationModel(graph, (
        PerturbedEdge((1, 3), +1, 0.5),
        PerturbedEdge((1, 2), -1, 0.5),
    ))
    rng = np.random.default_rng(123)
    draws = np.array([sample_realization(model, rng).active for _ in range(10_000)])
    freq = draws.mean(axis=0)
    # binomial 4-sigma bound: 4 * sqrt(0.25 / 10^4) = 0.02
    assert np.all(np.abs(freq - 0.5) <= 0.02)


def test_enumerate_two_fair_edges():
    graph = path3()
    model = PerturbationModel(graph, (
        PerturbedEdge((1, 3), +1, 0.5),
        PerturbedEdge((1, 2), -1, 0.5),
    ))
    outcomes = list(enumerate_realizations(model))
    assert len(outcomes) == 4
    assert all(w == pytest.approx(0.25) for _, w in outcomes)


def test_enumerate_single_edge_weights():
    graph = path3()
    model = PerturbationModel(graph, (PerturbedEdge((1, 3), +1, 0.3),))
    weights = [w for _, w in enumerate_realizations(model)]
    assert weights == pytest.approx([0.7, 0.3])


def test_enumerate_cap():
    graph = generate_sbm(20, 0.7, 0.08, seed=1)
    rng = np.random.default_rng(7)
    model = random_model(graph, rng, 21)
    with pytest.raises(CapExceeded):
        list(enumerate_realizations(model))


def test_enumerate_weights_sum_to_one():
    rng = np.random.default_rng(17)
    graph = generate_sbm(6, 0.8, 0.2, seed=3)
    model = random_model(graph, rng, 7)
    total = sum(w for _, w in enumerate_realizations(model))
    assert total == pytest.approx(1.0, abs=1e-12)


# --- exactness and trend properties ------------------------------------------------

def test_trace_identity_on_random_instances():
    # summing the first-order shifts over all modes uses completeness of the
    # eigenbasis, so it equals the trace of the update exactly
    rng = np.random.default_rng(29)
    for _ in range(100):
        graph = generate_sbm(int(rng.integers(5, 11)), 0.7, 0.15,
                             seed=int(rng.integers(2**31)))
        eig = eigendecompose(laplacian(graph))
        try:
            model = random_model(graph, rng, int(rng.integers(1, 8)))
            corr = first_order_eigen(eig, model)
        except DegenerateSpectrum:
            continue
        real = full_realization(model)
        dl = delta_laplacian(model, real)
        total = np.sum(corr.delta_lambda)
        assert total == pytest.approx(np.trace(dl), abs=1e-10)
        adds = int(np.sum(corr.sigma > 0))
        removes = model.num_edges - adds
        assert total == pytest.approx(2 * (adds - removes), abs=1e-10)


def test_eigenvalue_error_nondecreasing_in_perturbation_size():
    # ensemble-mean first-order eigenvalue error grows with the number of
    # simultaneously toggled edges (1 vs 5 vs 10)
    rng = np.random.default_rng(41)
    levels = (1, 5, 10)
    errors = {lvl: [] for lvl in levels}
    graphs_used = 0
    seed = 0
    while graphs_used < 100:
        seed += 1
        graph = generate_sbm(10, 0.7, 0.08, seed=seed * 131)
        eig = eigendecompose(laplacian(graph))
        if eig.spectral_gap_min < 1e-6:
            continue
        graphs_used += 1
        for lvl in levels:
            model = random_model(graph, rng, lvl, probs=1.0)
            corr = first_order_eigen(eig, model)
            real = full_realization(model)
            approx = approx_perturbed_eigs(eig, corr, real)
            exact = exact_perturbed_eigs(graph, model, real)
            errors[lvl].append(np.mean(np.abs(approx.lambda_tilde - exact.eigenvalues)))
    means = [np.mean(errors[lvl]) for lvl in levels]
    assert means[0] <= means[1] <= means[2]
