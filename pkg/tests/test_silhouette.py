import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freeview.silhouette import (
    STD_FLOOR,
    AdaptiveParams,
    BackgroundModel,
    build_background,
    distance_map,
    extract_silhouette,
)
from freeview.synthetic import proposal_from_silhouette
from oracles import brute_force_distance_map


class TestDistanceMap:
    def test_zero_on_proposal(self):
        prop = np.zeros((8, 8), dtype=bool)
        prop[2:5, 3:6] = True
        dm = distance_map(prop)
        assert np.all(dm[prop] == 0.0)

    def test_single_pixel_gives_euclidean_distance(self):
        prop = np.zeros((8, 8), dtype=bool)
        prop[0, 0] = True
        dm = distance_map(prop)
        assert dm[4, 3] == pytest.approx(5.0)
        assert dm[0, 1] == pytest.approx(1.0)
        assert dm[1, 1] == pytest.approx(np.sqrt(2.0))

    def test_empty_proposal_is_infinite(self):
        dm = distance_map(np.zeros((6, 9), dtype=bool))
        assert dm.shape == (6, 9)
        assert np.all(np.isinf(dm))

    def test_matches_brute_force(self):
        rng = np.random.default_rng(2)
        for density in (0.01, 0.1, 0.5):
            prop = rng.random((48, 64)) < density
            assert np.allclose(distance_map(prop), brute_force_distance_map(prop))

    def test_transpose_equivariance(self):
        rng = np.random.default_rng(3)
        prop = rng.random((32, 48)) < 0.05
        assert np.allclose(distance_map(prop.T), distance_map(prop).T)

    def test_rejects_non_2d(self):
        with pytest.raises(ValueError):
            distance_map(np.zeros((4, 4, 3), dtype=bool))


class TestBackgroundModel:
    def test_identical_frames_clamp_std_to_floor(self):
        frame = np.full((4, 5, 3), 77, dtype=np.uint8)
        bg = build_background([frame] * 10)
        assert np.allclose(bg.mean, 77.0)
        assert np.all(bg.std == STD_FLOOR)

    def test_population_statistics(self):
        a = np.zeros((2, 2, 3))
        b = np.zeros((2, 2, 3))
        a[0, 0, 0] = 10.0
        b[0, 0, 0] = 16.0
        bg = build_background([a, b])
        assert bg.mean[0, 0, 0] == pytest.approx(13.0)
        # population std of {10, 16} is 3 (above the floor)
        assert bg.std[0, 0, 0] == pytest.approx(3.0)

    def test_small_variation_is_floored(self):
        a = np.zeros((2, 2))
        b = np.full((2, 2), 2.0)
        bg = build_background([a, b])
        assert np.all(bg.std == STD_FLOOR)  # population std 1 < floor

    def test_matches_streaming_reference(self):
        rng = np.random.default_rng(4)
        frames = [rng.uniform(0, 255, (6, 7, 3)) for _ in range(50)]
        bg = build_background(frames)
        # Welford's online algorithm as an independent reference
        mean = np.zeros((6, 7, 3))
        m2 = np.zeros((6, 7, 3))
        for n, f in enumerate(frames, start=1):
            delta = f - mean
            mean += delta / n
            m2 += delta * (f - mean)
        assert np.allclose(bg.mean, mean, atol=1e-9)
        assert np.allclose(bg.std, np.maximum(np.sqrt(m2 / len(frames)), STD_FLOOR), atol=1e-9)

    def test_needs_two_frames(self):
        with pytest.raises(ValueError):
            build_background([np.zeros((2, 2))])

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            build_background([np.zeros((2, 2)), np.zeros((3, 2))])


class TestAdaptiveThreshold:
    def test_linear_ramp_endpoints(self):
        p = AdaptiveParams(theta_near=3.0, theta_far=8.0, d_max=32.0)
        assert p.threshold(0.0) == pytest.approx(3.0)
        assert p.threshold(16.0) == pytest.approx(5.5)
        assert p.threshold(32.0) == pytest.approx(8.0)
        assert p.threshold(1000.0) == pytest.approx(8.0)  # saturates
        assert p.threshold(np.inf) == pytest.approx(8.0)

    def test_equal_thetas_give_fixed_threshold(self):
        p = AdaptiveParams(theta_near=5.0, theta_far=5.0, d_max=10.0)
        assert np.all(p.threshold(np.array([0.0, 3.0, 100.0, np.inf])) == 5.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            AdaptiveParams(theta_near=9.0, theta_far=3.0)
        with pytest.raises(ValueError):
            AdaptiveParams(theta_near=0.0, theta_far=3.0)
        with pytest.raises(ValueError):
            AdaptiveParams(d_max=0.0)

    @settings(max_examples=50, deadline=None)
    @given(
        near=st.floats(0.1, 10.0),
        spread=st.floats(0.0, 10.0),
        d1=st.floats(0.0, 100.0),
        d2=st.floats(0.0, 100.0),
    )
    def test_threshold_is_monotone_in_distance(self, near, spread, d1, d2):
        p = AdaptiveParams(theta_near=near, theta_far=near + spread, d_max=32.0)
        lo, hi = sorted([d1, d2])
        assert p.threshold(lo) <= p.threshold(hi) + 1e-12


class TestExtraction:
    @staticmethod
    def flat_bg(h=24, w=32, level=50.0):
        return BackgroundModel(
            mean=np.full((h, w, 3), level), std=np.full((h, w, 3), STD_FLOOR)
        )

    def test_frame_equal_to_background_is_all_background(self):
        bg = self.flat_bg()
        frame = bg.mean.copy()
        dm = np.zeros((24, 32))
        sil = extract_silhouette(frame, bg, dm, AdaptiveParams())
        assert not sil.any()

    def test_strong_deviation_near_proposal_is_foreground(self):
        bg = self.flat_bg()
        frame = bg.mean.copy()
        frame[5, 5, 1] += 5.0 * STD_FLOOR  # 5 sigma on one channel
        dm = np.zeros((24, 32))
        sil = extract_silhouette(frame, bg, dm, AdaptiveParams(3.0, 8.0, 32.0))
        assert sil[5, 5]
        assert sil.sum() == 1

    def test_same_deviation_far_from_proposal_is_rejected(self):
        bg = self.flat_bg()
        frame = bg.mean.copy()
        frame[5, 5, 1] += 5.0 * STD_FLOOR
        dm = np.full((24, 32), 100.0)  # far beyond d_max -> threshold 8
        sil = extract_silhouette(frame, bg, dm, AdaptiveParams(3.0, 8.0, 32.0))
        assert not sil.any()

    def test_deviation_uses_max_over_channels(self):
        bg = self.flat_bg()
        frame = bg.mean.copy()
        frame[3, 3] += np.array([0.0, 0.0, 4.0 * STD_FLOOR])
        dm = np.zeros((24, 32))
        sil = extract_silhouette(frame, bg, dm, AdaptiveParams(3.0, 8.0, 32.0))
        assert sil[3, 3]

    def test_raising_thresholds_shrinks_foreground(self):
        rng = np.random.default_rng(6)
        bg = self.flat_bg()
        frame = bg.mean + rng.normal(0, 3 * STD_FLOOR, bg.shape)
        dm = rng.uniform(0, 64, (24, 32))
        loose = extract_silhouette(frame, bg, dm, AdaptiveParams(2.0, 6.0, 32.0))
        tight = extract_silhouette(frame, bg, dm, AdaptiveParams(3.0, 8.0, 32.0))
        assert np.all(loose | ~tight)  # tight subset of loose

    def test_adaptive_beats_fixed_strict_threshold_on_missed_regions(self):
        # A dim object the strict threshold misses: the proposal pulls the
        # threshold down nearby, recovering it without admitting the noise
        # blob far away.
        rng = np.random.default_rng(7)
        h, w = 48, 64
        bg = self.flat_bg(h, w)
        frame = bg.mean.copy()
        truth = np.zeros((h, w), dtype=bool)
        truth[10:30, 10:30] = True
        frame[truth] += 4.5 * STD_FLOOR  # between theta_near=3 and theta_far=8
        frame[40:44, 50:54] += 4.5 * STD_FLOOR  # distant distractor blob
        frame += rng.normal(0, 0.5, frame.shape)
        dm = distance_map(proposal_from_silhouette(truth, erode_px=3))

        adaptive = extract_silhouette(frame, bg, dm, AdaptiveParams(3.0, 8.0, 16.0))
        fixed = extract_silhouette(frame, bg, dm, AdaptiveParams(8.0, 8.0, 16.0))

        def iou(a, b):
            return (a & b).sum() / max((a | b).sum(), 1)

        assert iou(adaptive, truth) > 0.95
        assert iou(adaptive, truth) > iou(fixed, truth)
        assert not adaptive[40:44, 50:54].any()

    def test_shape_mismatches_raise(self):
        bg = self.flat_bg()
        with pytest.raises(ValueError):
            extract_silhouette(np.zeros((10, 10, 3)), bg, np.zeros((24, 32)), AdaptiveParams())
        with pytest.raises(ValueError):
            extract_silhouette(bg.mean, bg, np.zeros((10, 10)), AdaptiveParams())
