import numpy as np
import pytest

from _helpers import connected_labeled_graphs, trajectory_mismatches
from rcplab import rngstream
from rcplab.engine import (
    EngineResourceError,
    SimConfig,
    materialize_marks,
    replay,
    simulate,
    simulate_from_marks,
    simulate_trace,
)
from rcplab.graph import Graph, complete, path
from rcplab.heavytail import HeavyTailSpec
from rcplab.renewal import RenewalClock

SPEC = HeavyTailSpec(0.75)


def first_cure_mark(seed, v, horizon=1e6):
    clock = RenewalClock(SPEC, rngstream.stream(seed, rngstream.VERTEX, v))
    marks = clock.advance_to(horizon)
    return marks[0]


def test_single_vertex_extinction_at_first_cure():
    cfg = SimConfig(graph=complete(1), dist=SPEC, lam=2.0, horizon=1000.0, seed=11)
    res = simulate(cfg)
    assert res.extinction_time == first_cure_mark(11, 0)
    assert res.peak_infected == 1 and not res.censored
    assert res.final_state == (0,)


def test_lambda_to_zero_reduces_to_single_vertex():
    cfg = SimConfig(graph=complete(3), dist=SPEC, lam=1e-9, horizon=100.0, seed=4)
    res = simulate(cfg)
    assert res.extinction_time == first_cure_mark(4, 0, horizon=100.0)


def K2(horizon, cure0, cure1, edge, seed=0):
    cfg = SimConfig(graph=complete(2), dist=SPEC, lam=1.0, horizon=horizon, seed=seed)
    cure = [np.asarray(cure0, dtype=float), np.asarray(cure1, dtype=float)]
    edges = [np.asarray(edge, dtype=float)]
    return cfg, cure, edges


def test_scripted_reinfection_sequence():
    # source stays infected; target is re-infected at every edge mark
    cfg, cure, edges = K2(5.0, [10.0, np.inf], [1.5, 2.5, 20.0, np.inf],
                          [1.0, 2.0, 3.0, np.inf])
    res, trace = simulate_from_marks(cfg, cure, edges, want_trace=True)
    infects = [(t, v) for t, k, v, _ in trace.entries if k == "infect"]
    recovers = [(t, v) for t, k, v, _ in trace.entries if k == "recover"]
    assert infects == [(1.0, 1), (2.0, 1), (3.0, 1)]
    assert recovers == [(1.5, 1), (2.5, 1)]
    assert res.censored and res.final_state == (1, 1)
    assert res.peak_infected == 2


def test_tie_cure_blocks_outgoing_transmission():
    # v0's cure and the edge mark coincide: cure first, transmission finds
    # both endpoints healthy
    cfg, cure, edges = K2(5.0, [2.0, np.inf], [30.0, np.inf], [2.0, np.inf])
    res, trace = simulate_from_marks(cfg, cure, edges, want_trace=True)
    assert res.extinction_time == 2.0
    assert all(k != "infect" for _, k, _, _ in trace.entries)


def test_tie_cure_does_not_block_incoming_infection():
    # the target's own cure at the same instant precedes the transmission
    cfg, cure, edges = K2(5.0, [10.0, np.inf], [2.0, np.inf], [2.0, np.inf])
    res, trace = simulate_from_marks(cfg, cure, edges, want_trace=True)
    infects = [(t, v) for t, k, v, _ in trace.entries if k == "infect"]
    assert infects == [(2.0, 1)]
    assert res.final_state == (1, 1)


def test_absorbing_extinction_no_posthumous_events():
    cfg, cure, edges = K2(50.0, [3.0, np.inf], [2.0, np.inf], [1.0, 4.0, 6.0, np.inf])
    res, trace = simulate_from_marks(cfg, cure, edges, want_trace=True)
    assert res.extinction_time == 3.0
    assert all(t <= 3.0 for t, _, _, _ in trace.entries)


def test_checkpoint_semantics():
    cfg, cure, edges = K2(100.0, [3.0, np.inf], [2.0, np.inf],
                          [1.0, np.inf])
    cfg = SimConfig(graph=cfg.graph, dist=SPEC, lam=1.0, horizon=100.0, seed=0,
                    checkpoints=(1.5, 3.0, 50.0))
    res = simulate_from_marks(cfg, cure, edges)
    # survival at c means extinction strictly after c
    assert res.survival_at_checkpoints == (True, False, False)
    assert not res.censored


def test_checkpoint_monotone_under_absorption():
    for seed in range(30):
        cfg = SimConfig(graph=complete(3), dist=SPEC, lam=0.5, horizon=200.0,
                        seed=seed, checkpoints=(10.0, 50.0, 200.0))
        res = simulate(cfg)
        s = res.survival_at_checkpoints
        assert all(a or not b for a, b in zip(s, s[1:]))  # nonincreasing


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(graph=complete(2), dist=SPEC, lam=0.0, horizon=10.0, seed=1)
    with pytest.raises(ValueError):
        SimConfig(graph=complete(2), dist=SPEC, lam=1.0, horizon=10.0, seed=1, v0=5)
    with pytest.raises(ValueError):
        SimConfig(graph=complete(2), dist=SPEC, lam=1.0, horizon=10.0, seed=1,
                  checkpoints=(20.0,))
    with pytest.raises(ValueError):
        SimConfig(graph=complete(2), dist=SPEC, lam=1.0, horizon=10.0, seed=1,
                  checkpoints=(5.0, 2.0))


def test_cure_marks_independent_of_infection_course():
    # same seed, wildly different lambda: identical cure mark records
    base = dict(graph=complete(3), dist=SPEC, horizon=300.0, seed=21)
    _, tr_a = simulate_trace(SimConfig(lam=1e-9, **base))
    _, tr_b = simulate_trace(SimConfig(lam=3.0, **base))
    for a, b in zip(tr_a.cure_marks, tr_b.cure_marks):
        assert np.array_equal(a, b)


def test_replay_reproduces_result():
    for seed in range(20):
        cfg = SimConfig(graph=complete(3), dist=SPEC, lam=2.0, horizon=100.0,
                        seed=seed, checkpoints=(10.0, 100.0))
        res, trace = simulate_trace(cfg)
        assert replay(trace, cfg) == res


def test_compiled_and_reference_paths_agree():
    for g in (complete(2), complete(3), path(4)):
        for lam in (0.5, 2.0):
            for seed in range(40):
                cfg = SimConfig(graph=g, dist=SPEC, lam=lam, horizon=60.0, seed=seed)
                cure, edges = materialize_marks(cfg)
                assert simulate_from_marks(cfg, cure, edges) == \
                    simulate_from_marks(cfg, cure, edges, want_trace=True)[0]


def test_determinism_across_calls():
    cfg = SimConfig(graph=complete(4), dist=SPEC, lam=1.5, horizon=200.0, seed=77)
    assert simulate(cfg) == simulate(cfg)


def test_mark_budget_resource_error():
    cfg = SimConfig(graph=complete(6), dist=SPEC, lam=2.0, horizon=1e4, seed=1,
                    max_marks=1000)
    with pytest.raises(EngineResourceError):
        simulate(cfg)


def test_trace_budget_resource_error():
    cfg = SimConfig(graph=complete(3), dist=SPEC, lam=2.0, horizon=1000.0, seed=1,
                    max_trace_entries=1)
    with pytest.raises(EngineResourceError):
        simulate_trace(cfg)


def test_trace_csv_shapes():
    cfg = SimConfig(graph=complete(2), dist=SPEC, lam=2.0, horizon=20.0, seed=3)
    _, trace = simulate_trace(cfg)
    csv = trace.to_csv().splitlines()
    assert csv[0] == "time,kind,id,detail"
    assert len(csv) > 1
    marks = trace.marks_csv().splitlines()
    assert marks[0] == "kind,id,n,time"
    kinds = {line.split(",")[0] for line in marks[1:]}
    assert kinds == {"cure", "edge"}


def test_oracle_equivalence_small_grid():
    # smaller cousin of the acceptance criterion, run across all shapes
    mismatches = 0
    for g in connected_labeled_graphs(3):
        for lam in (0.5, 2.0):
            for alpha in (0.6, 0.75):
                for seed in range(25):
                    cfg = SimConfig(graph=g, dist=HeavyTailSpec(alpha), lam=lam,
                                    horizon=50.0, seed=seed)
                    mismatches += trajectory_mismatches(cfg)
    assert mismatches == 0
