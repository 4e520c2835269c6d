import numpy as np
import pytest

from crashcast.core import GeoPoint
from crashcast.cells import cell_of
from crashcast.evaluation import (
    ConfusionMatrix,
    DriftMonitorState,
    EmptyMatrix,
    FoldMode,
    FoldSpec,
    InsufficientData,
    LengthMismatch,
    SingleClassInput,
    classification_metrics,
    confusion_matrix,
    drift_update,
    kfold_cv,
    make_folds,
    roc_auc_ovr,
)


def test_confusion_perfect_diagonal():
    y = np.array([0, 1, 2, 3, 2, 1])
    cm = confusion_matrix(y, y)
    assert np.array_equal(cm.counts, np.diag([1, 2, 2, 1]))


def test_confusion_hand_tally():
    y_true = [0, 0, 1, 1, 2, 3]
    y_pred = [0, 1, 1, 1, 3, 3]
    cm = confusion_matrix(y_true, y_pred)
    expected = np.zeros((4, 4), dtype=int)
    expected[0, 0] = 1
    expected[0, 1] = 1
    expected[1, 1] = 2
    expected[2, 3] = 1
    expected[3, 3] = 1
    assert np.array_equal(cm.counts, expected)


def test_confusion_row_sums_are_true_counts():
    rng = np.random.default_rng(70)
    y_true = rng.integers(0, 4, 500)
    y_pred = rng.integers(0, 4, 500)
    cm = confusion_matrix(y_true, y_pred)
    assert np.array_equal(cm.counts.sum(axis=1), np.bincount(y_true, minlength=4))


def test_confusion_length_mismatch():
    with pytest.raises(LengthMismatch):
        confusion_matrix([0, 1], [0])


def test_metrics_all_ones_on_diagonal():
    cm = ConfusionMatrix(counts=np.diag([5, 6, 7, 8]))
    report = classification_metrics(cm)
    assert report.accuracy == 1.0
    assert report.macro_precision == 1.0
    assert report.macro_recall == 1.0
    assert report.macro_f1 == 1.0


def test_metrics_two_class_hand_arithmetic():
    cm = ConfusionMatrix(counts=np.array([[8, 2], [3, 7]]))
    report = classification_metrics(cm)
    assert report.accuracy == pytest.approx(0.75)
    assert report.per_class_precision[0] == pytest.approx(8 / 11)
    assert report.per_class_recall[0] == pytest.approx(0.8)
    # harmonic mean per class before averaging
    p, r = 8 / 11, 0.8
    assert report.per_class_f1[0] == pytest.approx(2 * p * r / (p + r))


def test_metrics_absent_class_convention():
    counts = np.zeros((4, 4), dtype=int)
    counts[0, 0] = 10
    counts[1, 1] = 5
    report = classification_metrics(ConfusionMatrix(counts=counts))
    assert report.per_class_recall[3] == 0.0
    assert report.per_class_precision[3] == 0.0
    assert report.macro_recall == pytest.approx((1 + 1 + 0 + 0) / 4)


def test_metrics_empty_matrix():
    with pytest.raises(EmptyMatrix):
        classification_metrics(ConfusionMatrix(counts=np.zeros((4, 4), dtype=int)))


def brute_force_auc(scores, positives):
    pos = np.flatnonzero(positives)
    neg = np.flatnonzero(~positives)
    total = 0.0
    for i in pos:
        for j in neg:
            if scores[i] > scores[j]:
                total += 1.0
            elif scores[i] == scores[j]:
                total += 0.5
    return total / (len(pos) * len(neg))


def test_auc_perfect_ranking():
    scores = np.array([[0.9, 0.1], [0.8, 0.2], [0.2, 0.8], [0.1, 0.9]])
    labels = np.array([0, 0, 1, 1])
    assert roc_auc_ovr(scores, labels) == 1.0


def test_auc_random_scores_near_half():
    rng = np.random.default_rng(71)
    n = 4000
    labels = rng.integers(0, 4, n)
    scores = rng.random((n, 4))
    assert roc_auc_ovr(scores, labels) == pytest.approx(0.5, abs=0.02)


def test_auc_matches_pairwise_oracle():
    rng = np.random.default_rng(72)
    for _ in range(5):
        n = int(rng.integers(30, 500))
        labels = rng.integers(0, 3, n)
        if len(np.unique(labels)) < 2:
            continue
        scores = rng.random((n, 4))
        scores[np.arange(n), labels] += rng.random(n)  # some signal
        # quantize to force ties
        scores = np.round(scores, 1)
        expected = np.mean([
            brute_force_auc(scores[:, c], labels == c) for c in np.unique(labels)
        ])
        assert roc_auc_ovr(scores, labels) == pytest.approx(expected, abs=1e-12)


def test_auc_single_class_raises():
    with pytest.raises(SingleClassInput):
        roc_auc_ovr(np.random.rand(10, 4), np.zeros(10, dtype=int))


class _ConstantModel:
    def __init__(self, cls):
        self.cls = cls

    def predict(self, X):
        return np.full(X.shape[0], self.cls)


class _NearestMean:
    def fit(self, X, y):
        self.means = {c: X[y == c].mean(axis=0) for c in np.unique(y)}
        self.classes = sorted(self.means)
        return self

    def predict(self, X):
        d = np.stack([np.linalg.norm(X - self.means[c], axis=1) for c in self.classes], axis=1)
        return np.asarray(self.classes)[np.argmin(d, axis=1)]


def test_folds_partition():
    rng = np.random.default_rng(73)
    y = rng.integers(0, 4, 200)
    folds = make_folds(y, FoldSpec(k=5), seed=1)
    combined = np.sort(np.concatenate(folds))
    assert np.array_equal(combined, np.arange(200))


def test_folds_stratified():
    rng = np.random.default_rng(74)
    y = np.array([0] * 100 + [1] * 50 + [2] * 25)
    folds = make_folds(y, FoldSpec(k=5), seed=2)
    for fold in folds:
        counts = np.bincount(y[fold], minlength=3)
        assert counts[0] == 20
        assert counts[1] == 10
        assert counts[2] == 5


def test_kfold_duplicated_data_zero_std():
    rng = np.random.default_rng(75)
    base_X = rng.normal(size=(40, 3))
    base_y = rng.integers(0, 2, 40)
    X = np.tile(base_X, (5, 1))
    y = np.tile(base_y, 5)

    def train_fn(X_train, y_train, seed):
        return _NearestMean().fit(X_train, y_train)

    # identical folds by construction: same 40 rows in each fold
    folds = [np.arange(i * 40, (i + 1) * 40) for i in range(5)]
    reports = []
    for fold in folds:
        mask = np.ones(200, dtype=bool)
        mask[fold] = False
        model = train_fn(X[mask], y[mask], 0)
        cm = confusion_matrix(y[fold], model.predict(X[fold]), n_classes=2)
        reports.append(classification_metrics(cm).accuracy)
    assert np.std(reports, ddof=1) == pytest.approx(0.0, abs=1e-12)


def test_kfold_constant_model_majority_accuracy():
    rng = np.random.default_rng(76)
    X = rng.normal(size=(500, 3))
    y = (rng.random(500) < 0.3).astype(int)

    def train_fn(X_train, y_train, seed):
        values, counts = np.unique(y_train, return_counts=True)
        return _ConstantModel(values[np.argmax(counts)])

    result = kfold_cv(X, y, train_fn, FoldSpec(k=5), seed=3)
    majority_fraction = max(np.mean(y == 0), np.mean(y == 1))
    assert result.mean["accuracy"] == pytest.approx(majority_fraction, abs=0.02)


def test_kfold_std_matches_two_pass_formula():
    rng = np.random.default_rng(77)
    X = rng.normal(size=(300, 4))
    y = (X[:, 0] > 0).astype(int)

    def train_fn(X_train, y_train, seed):
        return _NearestMean().fit(X_train, y_train)

    result = kfold_cv(X, y, train_fn, FoldSpec(k=5), seed=4)
    accs = [r.accuracy for r in result.folds]
    mean = sum(accs) / len(accs)
    var = sum((a - mean) ** 2 for a in accs) / (len(accs) - 1)
    assert result.std["accuracy"] == pytest.approx(var ** 0.5, abs=1e-12)
    assert result.mean["accuracy"] == pytest.approx(mean, abs=1e-12)


def test_geographic_folds_disjoint_cells():
    rng = np.random.default_rng(78)
    n = 400
    lats = 40.0 + rng.random(n) * 2.0
    lons = -78.0 + rng.random(n) * 3.0
    locations = [GeoPoint(float(a), float(b)) for a, b in zip(lats, lons)]
    y = rng.integers(0, 3, n)
    spec = FoldSpec(k=4, mode=FoldMode.GEOGRAPHIC, geo_resolution=8)
    folds = make_folds(y, spec, seed=5, locations=locations)
    cell_sets = [
        {cell_of(locations[i], 8) for i in fold}
        for fold in folds
    ]
    for i in range(len(cell_sets)):
        for j in range(i + 1, len(cell_sets)):
            assert not (cell_sets[i] & cell_sets[j])


def test_insufficient_data():
    with pytest.raises(InsufficientData):
        make_folds(np.array([0, 1]), FoldSpec(k=5), seed=0)
    with pytest.raises(InsufficientData):
        make_folds(np.zeros(50, dtype=int), FoldSpec(k=3, mode=FoldMode.GEOGRAPHIC), seed=0)


def test_drift_not_full_never_alerts():
    state = DriftMonitorState(window_size=100, baseline_accuracy=0.9, baseline_sigma=0.02)
    for _ in range(99):
        drift_update(state, 0, 1)  # every prediction wrong
        assert not state.alert


def test_drift_stationary_stream_stays_quiet():
    rng = np.random.default_rng(79)
    state = DriftMonitorState(window_size=1000, baseline_accuracy=0.9, baseline_sigma=0.01)
    for _ in range(10000):
        correct = rng.random() < 0.9
        drift_update(state, 1, 1 if correct else 0)
        assert not state.alert


def test_drift_step_drop_fires_within_window():
    rng = np.random.default_rng(80)
    state = DriftMonitorState(window_size=1000, baseline_accuracy=0.9, baseline_sigma=0.01)
    for _ in range(2000):
        correct = rng.random() < 0.9
        drift_update(state, 1, 1 if correct else 0)
    assert not state.alert
    fired_after = None
    for i in range(1000):
        correct = rng.random() < 0.85  # 5 sigma drop
        drift_update(state, 1, 1 if correct else 0)
        if state.alert:
            fired_after = i
            break
    assert fired_after is not None


def test_metrics_invariant_to_sample_permutation():
    rng = np.random.default_rng(81)
    y_true = rng.integers(0, 4, 300)
    y_pred = rng.integers(0, 4, 300)
    scores = rng.random((300, 4))
    perm = rng.permutation(300)
    assert np.array_equal(confusion_matrix(y_true, y_pred).counts,
                          confusion_matrix(y_true[perm], y_pred[perm]).counts)
    assert roc_auc_ovr(scores, y_true) == pytest.approx(
        roc_auc_ovr(scores[perm], y_true[perm]), abs=1e-12)
