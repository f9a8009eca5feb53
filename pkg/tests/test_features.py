import numpy as np
import pytest

from epiwarn.constants import COUNT_COLUMNS
from epiwarn.dataset import Window
from epiwarn.features import (FAMILIES, FeatureLayout, build_features,
                              feature_matrix)
from epiwarn.koopman import KoopmanModel


def window_with(end_day=6, **series):
    """Five-day window with the given series, zeros elsewhere."""
    values = np.zeros((5, len(COUNT_COLUMNS)))
    for name, column in series.items():
        values[:, COUNT_COLUMNS.index(name)] = column
    return Window(0, end_day, values, 1, 0.6, 1.3, 1.302)


def test_statistics_of_growing_series():
    """I series 1, 1, 2, 3, 5 summarizes to 5, 2.4, 5, 4 and 1."""
    vector = build_features(window_with(I=[1, 1, 2, 3, 5]))
    assert vector['I_last'] == 5
    assert vector['I_mean'] == pytest.approx(2.4)
    assert vector['I_max'] == 5
    assert vector['I_change'] == 4
    assert vector['I_daily_change'] == 1


def test_statistics_of_constant_series():
    """A constant series has no change."""
    vector = build_features(window_with(S=[7] * 5))
    assert (vector['S_last'], vector['S_mean'], vector['S_max']) == \
           (7, 7, 7)
    assert vector['S_change'] == 0 and vector['S_daily_change'] == 0


def test_run_level_features():
    """Susceptibility bounds and end day are features."""
    vector = build_features(window_with(end_day=9))
    assert vector['s_lo'] == 1.3 and vector['s_hi'] == 1.302
    assert vector['end_day'] == 9


def test_layout_lengths():
    """38 features without a Koopman model, 51 with one."""
    assert len(FeatureLayout()) == 38
    assert len(FeatureLayout((6, 5))) == 51
    assert len(FeatureLayout(include_end_day=False)) == 37
    model = KoopmanModel(scale=500.0).init(0)
    assert len(build_features(window_with(I=[1] * 5), model)) == 51


def test_layout_families():
    """Every feature belongs to a known family."""
    layout = FeatureLayout((6, 5))
    index = layout.family_index()
    assert set(index) <= set(FAMILIES)
    assert sum(len(v) for v in index.values()) == len(layout)
    assert len(index['koopman']) == 13
    assert len(index['other']) == 20


def test_layout_names_are_unique():
    layout = FeatureLayout((6, 5))
    assert len(set(layout.names)) == len(layout.names)


def test_attack_rate_head_is_not_a_feature():
    """The Koopman family ends with the incidence sum and probability."""
    names = FeatureLayout((6, 5)).names
    koopman = [n for n in names if n.startswith('koop_')]
    assert not any('ar' in n.split('_')[1:] for n in koopman)
    assert koopman[-2:] == ['koop_new_inf_sum', 'koop_p_outbreak']
    assert len(koopman) == 6 + 5 + 2


def test_koopman_features_come_from_model():
    """The Koopman family holds the latent, forecasts and head output."""
    model = KoopmanModel(scale=500.0).init(1)
    window = window_with(S=[490, 480, 470, 460, 450], I=[5, 10, 20, 30, 40])
    vector = build_features(window, model)
    z = model.encode(window.values)
    assert vector['koop_z0'] == pytest.approx(z[0])
    assert vector['koop_p_outbreak'] == \
        pytest.approx(model.predict_heads(z)[1])
    assert vector['koop_I_1'] == pytest.approx(
        model.forecast(window.values)[0, COUNT_COLUMNS.index('I')])


def test_matrix_of_no_windows():
    """No windows give an empty matrix with the layout's width."""
    x, layout = feature_matrix([])
    assert x.shape == (0, len(layout))


def test_matrix_rows_match_vectors():
    """Matrix rows equal single-window feature vectors."""
    windows = [window_with(I=[i, i + 1, i + 2, i + 3, i + 4])
               for i in range(3)]
    x, _ = feature_matrix(windows)
    for row, window in zip(x, windows):
        assert np.array_equal(row, build_features(window).values)
