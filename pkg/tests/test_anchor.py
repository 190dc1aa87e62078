import itertools
import random

import pytest

from anchorplay.anchor import (
    AnchorMarker,
    ContractViolation,
    RewardLedger,
    TrackingModel,
    localized_search,
    simulate_tracking_init,
)
from anchorplay.locomotion import TRANSIT, Anchored, GatingConfig, PoseEstimate, step_state_machine


def test_search_examples():
    assert localized_search(PoseEstimate((1.0, 1.0)), [], 1.0) is None
    assert localized_search(PoseEstimate((1.0, 1.0)), [AnchorMarker("A", (1.0, 1.0))], 0.5) == "A"
    pair = [AnchorMarker("A", (0.0, 0.0)), AnchorMarker("B", (0.6, 0.0))]
    # brute force: A at 0.31, B at 0.29
    dists = {m.id: abs(m.position[0] - 0.31) for m in pair}
    assert min(dists, key=dists.get) == "B"
    assert localized_search(PoseEstimate((0.31, 0.0)), pair, 1.0) == "B"


def test_search_respects_both_radii():
    m = [AnchorMarker("A", (0.0, 0.0), detect_radius=0.5)]
    assert localized_search(PoseEstimate((0.5, 0.0)), m, 1.0) == "A"
    assert localized_search(PoseEstimate((0.51, 0.0)), m, 1.0) is None
    assert localized_search(PoseEstimate((0.3, 0.0)), m, 0.2) is None
    with pytest.raises(ValueError):
        localized_search(PoseEstimate(), m, 0.0)


def test_search_tie_goes_to_smaller_id():
    ms = [AnchorMarker("B", (1.0, 0.0)), AnchorMarker("A", (-1.0, 0.0))]
    assert localized_search(PoseEstimate(), [AnchorMarker(m.id, m.position, 2.0) for m in ms], 3.0) == "A"


def test_search_is_order_independent():
    rng = random.Random(3)
    for _ in range(200):
        ms = [AnchorMarker(c, (rng.uniform(0, 3), rng.uniform(0, 3)), rng.uniform(0.2, 1.0)) for c in "ABCDE"]
        pose = PoseEstimate((rng.uniform(0, 3), rng.uniform(0, 3)))
        found = {localized_search(pose, list(p), 0.8) for p in itertools.permutations(ms, 5)}
        assert len(found) == 1


class Counter:
    def __init__(self, seed):
        self.calls = 0
        self._r = random.Random(seed)

    def random(self):
        self.calls += 1
        return self._r.random()


def test_stationary_init_is_instant_and_draws_nothing():
    rng = Counter(0)
    out = simulate_tracking_init(0.0, True, rng)
    assert (out.success, out.init_ticks, out.loss_event) == (True, 1, False)
    assert simulate_tracking_init(500.0, True, rng).success
    assert rng.calls == 0


def test_zero_coefficient_never_loses():
    rng = Counter(1)
    model = TrackingModel(k=0.0)
    assert all(not simulate_tracking_init(v, False, rng, model).loss_event for v in range(1000))


def test_saturated_probability_always_loses():
    rng = Counter(2)
    model = TrackingModel(k=1.0, p_max=1.0)
    outs = [simulate_tracking_init(10.0, False, rng, model) for _ in range(1000)]
    assert all(o.loss_event and not o.success for o in outs)


def test_loss_rate_matches_model():
    rng = Counter(3)
    model = TrackingModel()
    n = 20000
    losses = sum(simulate_tracking_init(10.0, False, rng, model).loss_event for _ in range(n))
    p = model.loss_probability(10.0)
    assert p == pytest.approx(0.2)
    assert abs(losses / n - p) < 4 * (p * (1 - p) / n) ** 0.5


def test_tracking_model_clamp_and_validate():
    m = TrackingModel()
    assert m.loss_probability(0.0) == 0.0
    assert m.loss_probability(1e6) == m.p_max
    with pytest.raises(ValueError):
        simulate_tracking_init(-1.0, False, Counter(0))
    for bad in (TrackingModel(k=-1.0), TrackingModel(p_max=1.5)):
        with pytest.raises(ValueError):
            bad.validate()


def test_reward_once_per_visit():
    ledger = RewardLedger(1)
    first = ledger.instantiate_reward("A", 7.5)
    assert (first.agent, first.marker, first.t) == (1, "A", 7.5)
    assert ledger.instantiate_reward("A", 7.6) is None
    assert ledger.in_visit


def test_reward_outside_anchor_is_contract_violation():
    with pytest.raises(ContractViolation):
        RewardLedger(0).instantiate_reward("A", 1.0, anchored=False)


def test_reward_again_after_leaving_and_returning():
    cfg = GatingConfig()
    ledger = RewardLedger(0)
    state, t, events = TRANSIT, 0.0, []
    script = [True] * 150 + [False] * 20 + [True] * 150
    for still in script:
        t = round(t + 0.01, 9)
        state, cmds = step_state_machine(state, still, t, None, cfg)
        if any(c.value == "CameraDisable" for c in cmds):
            ledger.end_visit()
        if isinstance(state, Anchored):
            ev = ledger.instantiate_reward("A", t)
            if ev:
                events.append(ev)
    assert len(events) == 2
