import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmtrack.geometry import vec3
from swarmtrack.radar import (
    SPEED_OF_LIGHT,
    CapabilitySet,
    FmcwLink,
    RadarProfile,
    doppler_variance,
    range_variance,
    reference_variances_from_physical,
    sense,
    snr,
    true_observables,
)
from swarmtrack.world import Obstacle, target_state

LINK = FmcwLink(bandwidth_hz=4e9, chirp_duration_s=1e-4, n_chirp=256, snr0_db=30.0)
PROFILE = RadarProfile.build(sigma_r0_m=1e-3, sigma_b0_deg=10.0, sigma_d0_hz=0.1, physical=LINK)
ALL_CAPS = CapabilitySet(ranging=True, bearing=True, doppler=True)


class TestSnr:
    def test_reference_point(self):
        assert snr(1.0, 1.0, PROFILE) == pytest.approx(10.0 ** (30.0 / 10.0))

    def test_path_loss_scaling(self):
        assert snr(10.0, 0.1, PROFILE) == pytest.approx(LINK.snr0 * 1e-5)

    def test_distance_doubling(self):
        assert snr(2.0, 1.0, PROFILE) == pytest.approx(LINK.snr0 / 16.0)


class TestVarianceScaling:
    def test_reference_case(self):
        assert range_variance(1.0, 1.0, PROFILE) == pytest.approx(PROFILE.sigma_r0_sq)
        assert doppler_variance(1.0, 1.0, PROFILE) == pytest.approx(PROFILE.sigma_d0_sq)

    def test_hand_evaluated_range_variance(self):
        profile = RadarProfile.build(sigma_r0_m=1e-3, sigma_b0_deg=10.0, sigma_d0_hz=1.0)
        var = range_variance(10.0, 0.1, profile)
        assert var == pytest.approx(0.1)
        assert math.sqrt(var) == pytest.approx(0.316, abs=1e-3)

    def test_distance_doubling_power_law(self):
        assert range_variance(4.0, 1.0, PROFILE) == pytest.approx(
            16.0 * range_variance(2.0, 1.0, PROFILE)
        )

    @given(d=st.floats(0.5, 5000), rcs=st.floats(1e-4, 10))
    @settings(max_examples=200)
    def test_scaling_law_invariant(self, d, rcs):
        # variance * rcs / d^gamma must reduce to the reference variance
        var = range_variance(d, rcs, PROFILE)
        assert var * rcs / d**PROFILE.gamma == pytest.approx(
            PROFILE.sigma_r0_sq, rel=1e-12
        )


class TestReferenceVariancesFromPhysical:
    def test_chirp_count_quadrupled_divides_doppler_variance_by_16(self):
        base = reference_variances_from_physical(LINK)
        quad = reference_variances_from_physical(
            FmcwLink(LINK.bandwidth_hz, LINK.chirp_duration_s, LINK.n_chirp * 4, LINK.snr0_db)
        )
        assert quad[1] == pytest.approx(base[1] / 16.0)
        assert quad[0] == pytest.approx(base[0])

    def test_bandwidth_doubled_divides_range_variance_by_4(self):
        base = reference_variances_from_physical(LINK)
        double = reference_variances_from_physical(
            FmcwLink(LINK.bandwidth_hz * 2, LINK.chirp_duration_s, LINK.n_chirp, LINK.snr0_db)
        )
        assert double[0] == pytest.approx(base[0] / 4.0)
        assert double[1] == pytest.approx(base[1])

    def test_unit_snr_reference_value(self):
        # direct evaluation: 1.5 * (c/2)^2 / (2 pi 4e9)^2 at SNR = 1
        link = FmcwLink(bandwidth_hz=4e9, chirp_duration_s=1e-4, n_chirp=64, snr0_db=0.0)
        var_r, _ = reference_variances_from_physical(link, gamma=4.0)
        expected = 1.5 * (SPEED_OF_LIGHT / 2.0) ** 2 / (2.0 * math.pi * 4e9) ** 2
        assert var_r == pytest.approx(expected, rel=1e-12)
        assert var_r == pytest.approx(5.3357e-5, rel=1e-4)


class TestTrueObservables:
    def test_range_channel_scales_distance(self):
        obs = true_observables(
            vec3(5, 0, 0), vec3(0, 0, 0), vec3(0, 0, 0), vec3(0, 0, 0), PROFILE, ALL_CAPS
        )
        assert obs.range_ == pytest.approx(2.0 * 5.0)

    def test_receding_target_doppler(self):
        # receding at 1 m/s along the line of sight: 2 / wavelength
        obs = true_observables(
            vec3(10, 0, 0), vec3(1, 0, 0), vec3(0, 0, 0), vec3(0, 0, 0), PROFILE, ALL_CAPS
        )
        assert obs.doppler == pytest.approx(2.0 / PROFILE.wavelength)
        assert obs.doppler == pytest.approx(513.69, abs=0.01)
        assert obs.doppler > 0  # positive for a receding target

    def test_transverse_motion_has_zero_doppler(self):
        obs = true_observables(
            vec3(10, 0, 0), vec3(0, 3, 0), vec3(0, 0, 0), vec3(0, 0, 0), PROFILE, ALL_CAPS
        )
        assert obs.doppler == pytest.approx(0.0, abs=1e-12)

    def test_channels_follow_capabilities(self):
        obs = true_observables(
            vec3(5, 0, 0),
            vec3(0, 0, 0),
            vec3(0, 0, 0),
            vec3(0, 0, 0),
            PROFILE,
            CapabilitySet(ranging=True),
        )
        assert obs.range_ is not None
        assert obs.azimuth is None and obs.doppler is None


class TestSense:
    def test_negligible_noise_recovers_truth(self):
        quiet = RadarProfile.build(sigma_r0_m=1e-12, sigma_b0_deg=1e-10, sigma_d0_hz=1e-12)
        target = target_state([30.0, 40.0, 10.0], [0.5, -0.2, 0.0])
        rec = sense(
            target, vec3(0, 0, 10), vec3(0, 0, 0), quiet, ALL_CAPS, 1.0, [],
            np.random.default_rng(0), time_index=1, sender_id=0,
        )
        truth = true_observables(
            target[:3], target[3:], vec3(0, 0, 10), vec3(0, 0, 0), quiet, ALL_CAPS
        )
        assert rec.los
        assert rec.range_obs == pytest.approx(truth.range_, abs=1e-6)
        assert rec.azimuth_obs == pytest.approx(truth.azimuth, abs=1e-6)
        assert rec.doppler_obs == pytest.approx(truth.doppler, abs=1e-6)

    def test_nlos_geometry_clears_flag(self):
        box = Obstacle(lo=vec3(4, -1, -1), hi=vec3(6, 1, 1))
        target = target_state([10.0, 0.0, 0.0], [0.0, 0.0, 0.0])
        rec = sense(
            target, vec3(0, 0, 0), vec3(0, 0, 0), PROFILE, ALL_CAPS, 1.0, [box],
            np.random.default_rng(0), time_index=1, sender_id=0,
        )
        assert not rec.los
        # outlier channels still populated, inside their support
        assert 0.0 <= rec.range_obs <= 4000.0
        assert -math.pi <= rec.azimuth_obs <= math.pi
        assert 0.0 <= rec.elevation_obs <= math.pi

    def test_empirical_noise_std_matches_model(self):
        target = target_state([50.0, 20.0, 30.0], [0.0, 0.0, 0.0])
        pos, vel = vec3(0, 0, 0), vec3(0, 0, 0)
        d = float(np.linalg.norm(target[:3]))
        truth = true_observables(target[:3], target[3:], pos, vel, PROFILE, ALL_CAPS)
        rng = np.random.default_rng(42)
        n = 100_000
        errs = np.empty(n)
        for i in range(n):
            rec = sense(target, pos, vel, PROFILE, ALL_CAPS, 0.5, [], rng, 1, 0)
            errs[i] = rec.range_obs - truth.range_
        expected_std = math.sqrt(range_variance(d, 0.5, PROFILE))
        assert errs.std() == pytest.approx(expected_std, rel=0.02)

    def test_bit_reproducible_with_same_seed(self):
        target = target_state([50.0, 20.0, 30.0], [0.5, 0.0, 0.0])
        recs = []
        for _ in range(2):
            rng = np.random.default_rng(777)
            recs.append(
                sense(target, vec3(1, 2, 3), vec3(0.1, 0, 0), PROFILE, ALL_CAPS, 0.1, [], rng, 5, 2)
            )
        assert recs[0].range_obs == recs[1].range_obs
        assert recs[0].azimuth_obs == recs[1].azimuth_obs
        assert recs[0].doppler_obs == recs[1].doppler_obs

    def test_record_carries_variances_at_true_distance(self):
        target = target_state([100.0, 0.0, 50.0], [0.0, 0.0, 0.0])
        rec = sense(
            target, vec3(0, 0, 0), vec3(0, 0, 0), PROFILE, ALL_CAPS, 0.1, [],
            np.random.default_rng(0), 1, 0,
        )
        d = float(np.linalg.norm(target[:3]))
        assert rec.range_var == pytest.approx(range_variance(d, 0.1, PROFILE))
        assert rec.bearing_var == pytest.approx(PROFILE.sigma_b0**2)
        assert rec.doppler_var == pytest.approx(doppler_variance(d, 0.1, PROFILE))


def test_profile_requires_some_capability():
    with pytest.raises(ValueError):
        CapabilitySet().validate()


def test_profile_build_derives_from_link_budget():
    profile = RadarProfile.build(sigma_b0_deg=5.0, physical=LINK)
    var_r, var_d = reference_variances_from_physical(LINK)
    assert profile.sigma_r0_sq == pytest.approx(var_r)
    assert profile.sigma_d0_sq == pytest.approx(var_d)
    explicit = RadarProfile.build(sigma_r0_m=1e-2, sigma_b0_deg=5.0, physical=LINK)
    assert explicit.sigma_r0_sq == pytest.approx(1e-4)
    assert explicit.sigma_d0_sq == pytest.approx(var_d)
