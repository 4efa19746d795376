import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from barrierfree.controller import (
    PresenceTracker,
    controller_config_from_dict,
    frames_from_lines,
    presence_update,
    replay,
)
from barrierfree.detection import MobilityGroup
from barrierfree.errors import ConfigError
from barrierfree.sim import (
    DEFAULT_SPEEDS,
    Arrival,
    BurstMiss,
    ScenarioConfig,
    SpeedModel,
    ablate_n,
    absence_false_alarm_prob,
    confirm_frames,
    dumps_frames,
    run_scenario,
    scenario_from_dict,
    scenario_to_dict,
    simulate_premature_absence,
)

W, V, B = (MobilityGroup.WALKING_IMPAIRMENT, MobilityGroup.VISUAL_IMPAIRMENT,
           MobilityGroup.MOBILITY_BURDEN)


def brute_force_prob(p, n, m):
    total = 0.0
    for bits in range(2 ** m):
        seq = [(bits >> i) & 1 for i in range(m)]
        run = best = 0
        for b in seq:
            run = run + 1 if b else 0
            best = max(best, run)
        if best >= n:
            k = sum(seq)
            total += p ** k * (1 - p) ** (m - k)
    return total


class TestFalseAlarmProbability:
    @pytest.mark.parametrize("p", [0.1, 0.35, 0.9])
    @pytest.mark.parametrize("m", [1, 5, 20])
    def test_n1_closed_form(self, p, m):
        assert absence_false_alarm_prob(p, 1, m) == pytest.approx(1 - (1 - p) ** m, abs=1e-14)

    @pytest.mark.parametrize("n,m", [(2, 6), (3, 10), (4, 12)])
    def test_brute_force(self, n, m):
        assert absence_false_alarm_prob(0.3, n, m) == pytest.approx(brute_force_prob(0.3, n, m), abs=1e-13)

    def test_edges(self):
        assert absence_false_alarm_prob(0.0, 2, 10) == 0.0
        assert absence_false_alarm_prob(1.0, 3, 3) == 1.0
        assert absence_false_alarm_prob(0.5, 5, 4) == 0.0

    def test_monotone_in_n(self):
        probs = [absence_false_alarm_prob(0.3, n, 20) for n in range(1, 6)]
        assert all(a > b for a, b in zip(probs, probs[1:]))

    def test_domain(self):
        with pytest.raises(ValueError):
            absence_false_alarm_prob(1.5, 2, 3)
        with pytest.raises(ValueError):
            absence_false_alarm_prob(0.5, 0, 3)


class TestConfirmFrames:
    def test_example(self, accel_path):
        misses = np.array([[0, 1, 1, 0, 1], [1, 0, 1, 0, 1], [0, 0, 1, 1, 1]], dtype=bool)
        assert confirm_frames(misses, 2).tolist() == [2, -1, 3]

    def test_paths_agree(self, rng, monkeypatch):
        from barrierfree._accel import DISABLE_ENV
        misses = rng.random((500, 30)) < 0.4
        for n in (1, 2, 3, 5):
            monkeypatch.setenv(DISABLE_ENV, "0")
            a = confirm_frames(misses, n)
            monkeypatch.setenv(DISABLE_ENV, "1")
            assert np.array_equal(a, confirm_frames(misses, n))

    @settings(max_examples=100)
    @given(st.lists(st.booleans(), max_size=25), st.integers(1, 4))
    def test_matches_presence_tracker(self, seq, n):
        tr = presence_update(PresenceTracker(W), True, n)
        expected = -1
        for k, miss in enumerate(seq):
            tr = presence_update(tr, not miss, n)
            if tr.confirmed_absent:
                expected = k
                break
        got = confirm_frames(np.array([seq], dtype=bool).reshape(1, len(seq)), n)[0]
        assert got == expected

    def test_simulated_rate_near_dp(self):
        est = simulate_premature_absence(0.3, 2, 10, 20000, rng=1)
        exact = absence_false_alarm_prob(0.3, 2, 10)
        sigma = math.sqrt(exact * (1 - exact) / 20000)
        assert abs(est - exact) <= 3 * sigma

    def test_shape_checked(self):
        with pytest.raises(ValueError):
            confirm_frames(np.zeros(4, dtype=bool), 2)


class TestScenario:
    def deterministic(self, **kw):
        # one wheelchair user at 12/13.5 m/s exits at exactly 13.5 s
        speeds = dict(DEFAULT_SPEEDS)
        speeds[W] = SpeedModel(12.0 / 13.5, 0.0)
        return ScenarioConfig(speeds=speeds, arrivals=(Arrival(W),), miss_probability=0.0, **kw)

    def test_exact_crossing(self):
        metrics, log = run_scenario(self.deterministic(validation_frames=1))
        outcome = log[0]["outcome"]
        assert outcome.exit_times_s == pytest.approx((13.5,))
        assert outcome.granted_s == 4 and outcome.green_end_s == 14.0
        assert metrics.success_rate == 100.0 and metrics.real_success_rate == 100.0
        assert 0 <= metrics.latency_s <= 1.0
        assert metrics.avg_extended_green_s[W] == 4.0

    def test_latency_grows_with_window(self):
        lat = [run_scenario(self.deterministic(validation_frames=n))[0].latency_s for n in (1, 2, 3)]
        assert lat == sorted(lat)
        assert lat[2] <= 3 * 0.3634 + 1

    def test_slow_pedestrian_hits_cap(self):
        speeds = dict(DEFAULT_SPEEDS)
        speeds[B] = SpeedModel(0.5, 0.0)
        metrics, log = run_scenario(ScenarioConfig(speeds=speeds, arrivals=(Arrival(B),),
                                                   miss_probability=0.0))
        assert log[0]["outcome"].granted_s == 3
        assert metrics.success_rate == 0.0 and metrics.real_success_rate == 0.0

    def test_no_window_never_confirms(self):
        _, log = run_scenario(self.deterministic(validation_frames=math.inf))
        assert log[0]["outcome"].granted_s == 6

    def test_deterministic(self):
        a, la = run_scenario(ScenarioConfig(rng_seed=7))
        b, lb = run_scenario(ScenarioConfig(rng_seed=7))
        assert a == b
        assert [e["commands"] for e in la] == [e["commands"] for e in lb]

    def test_grouped_event(self):
        cfg = ScenarioConfig(arrivals=(Arrival(W, event=0), Arrival(V, event=0), Arrival(B)))
        assert [len(e) for e in cfg.events()] == [2, 1]
        metrics, log = run_scenario(cfg)
        assert log[0]["outcome"].top_group is V
        assert metrics.n_events == 2

    def test_burst_channel_runs(self):
        cfg = ScenarioConfig(burst_miss=BurstMiss(0.1, 0.5))
        assert run_scenario(cfg)[0].n_events == 3

    def test_log_replays_identically(self):
        cfg = ScenarioConfig(rng_seed=3)
        _, log = run_scenario(cfg)
        doc = json.loads(json.dumps({
            "base_green_s": cfg.base_green_s, "validation_frames": cfg.validation_frames,
            "zones": {str(c): [list(v) for v in z.vertices]
                      for c, z in cfg.controller_config().zones.items()},
        }))
        ctl_cfg = controller_config_from_dict(doc)
        for event in log:
            frames = frames_from_lines(dumps_frames(event["frames"]).splitlines())
            replayed = replay(frames, ctl_cfg)
            # the simulator stops feeding frames once the green ends
            assert replayed == event["commands"]


class TestSpeedCalibration:
    @pytest.mark.parametrize("group,p95", [(W, 5.8), (V, 7.9), (B, 2.7)])
    def test_extra_time_quantile(self, group, p95):
        rng = np.random.default_rng(0)
        model = DEFAULT_SPEEDS[group]
        extra = np.array([12.0 / model.draw(rng) - 10.0 for _ in range(20000)])
        assert np.quantile(extra, 0.95) == pytest.approx(p95, abs=0.25)

    def test_positive_draws(self):
        rng = np.random.default_rng(0)
        model = SpeedModel(0.1, 1.0)
        assert all(model.draw(rng) > model.minimum for _ in range(200))


class TestAblation:
    def test_paired_rows(self):
        table = ablate_n(ScenarioConfig(), [1, 2, 3], seeds=range(40))
        assert list(table) == [1, 2, 3]
        assert all(m.n_events == 120 for m in table.values())
        assert table[1].latency_s <= table[3].latency_s

    def test_empty(self):
        with pytest.raises(ValueError):
            ablate_n(ScenarioConfig(), [])


class TestScenarioFiles:
    def test_roundtrip(self):
        cfg = ScenarioConfig(arrivals=(Arrival(W, 1.5, event=2),), burst_miss=BurstMiss(0.1, 0.2),
                             validation_frames=math.inf)
        assert scenario_from_dict(json.loads(json.dumps(scenario_to_dict(cfg)))) == cfg

    @pytest.mark.parametrize("doc", [
        {"unknown": 1},
        {"miss_probability": 1.5},
        {"arrivals": [{"group": "unrestricted"}]},
        {"arrivals": [{"group": "walking", "entry_time_s": -1}]},
        {"speeds": {"visual": {"mean": 0, "std": 0.1}}},
        {"num_cameras": 0},
        {"validation_frames": 0},
    ])
    def test_invalid(self, doc):
        with pytest.raises(ConfigError):
            scenario_from_dict(doc)
