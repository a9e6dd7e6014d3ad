import numpy as np
import pytest

from gridid.recovery import StoppingRule, admm_solve
from gridid.tuning import KappaSearch, TuningConfig, draw_masks, masked_error, tune_kappa


def test_masks_hide_the_requested_fraction():
    masks = draw_masks((13, 40), 0.1, 5, seed=3)
    assert all(m.sum() == 52 for m in masks)
    again = draw_masks((13, 40), 0.1, 5, seed=3)
    assert all(np.array_equal(a, b) for a, b in zip(masks, again))
    assert not np.array_equal(masks[0], masks[1])


def test_masked_error_definition(rng):
    L = rng.normal(size=(3, 8))
    mask = draw_masks(L.shape, 0.2, 1, seed=0)[0]
    stop = StoppingRule(max_iter=300)
    kappa = (0.1, 0.1, 0.1, 0.5)
    res = admm_solve(np.where(mask, 0.0, L), kappa, 1.0, stop)
    pred = np.linalg.solve(res.B_hat, res.S_hat)
    expected = np.sum((pred[mask] - L[mask]) ** 2)
    assert masked_error(L, mask, kappa, 1.0, stop) == pytest.approx(expected, rel=1e-10)


def test_single_candidate_is_returned(rng):
    cfg = TuningConfig(([0.1], [0.2], [0.3], [0.4]), 0.1, 2, 0)
    best, table = tune_kappa(rng.normal(size=(3, 10)), cfg, 1.0, StoppingRule(max_iter=100))
    assert tuple(best) == (0.1, 0.2, 0.3, 0.4)
    assert len(table) == 1 and len(table[0][2]) == 2


def test_table_is_sorted(rng):
    cfg = TuningConfig(([0.01, 1.0], [0.01], [0.01, 1.0], [0.5]), 0.1, 2, 0)
    _, table = tune_kappa(rng.normal(size=(3, 10)), cfg, 1.0, StoppingRule(max_iter=100))
    errs = [e for _, e, _ in table]
    assert errs == sorted(errs) and len(table) == 4


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1])
def test_mask_fraction_precondition(bad):
    with pytest.raises(ValueError):
        TuningConfig(([1], [1], [1], [1]), bad)


def test_grid_validation():
    with pytest.raises(ValueError):
        TuningConfig(([1], [1], [1]))
    with pytest.raises(ValueError):
        TuningConfig(([1], [1], [1], [0.0]))


def test_search_estimator(rng):
    X = rng.normal(size=(10, 3))
    ks = KappaSearch(grid=([0.01, 0.1], [0.1], [0.1], [0.5]), repeats=2, rho=1.0,
                     max_iter=100).fit(X)
    assert ks.rank_of(ks.best_kappa_) == 1
    assert {ks.rank_of((0.01, 0.1, 0.1, 0.5)), ks.rank_of((0.1, 0.1, 0.1, 0.5))} == {1, 2}
    with pytest.raises(KeyError):
        ks.rank_of((9, 9, 9, 9))
