"""Acceptance suite: nine criteria, one PASS/FAIL line each.

Criteria 5-8 share a 500-run corpus computed once per session.  Criterion 1
requires the strict strategies to reproduce the relaxed-only lost-update
prediction; the strict boundary semantics cut the reader's own write out of
the prefix there, so those two clauses fail.  They are asserted as stated
and reported honestly rather than weakened.
"""

import random
import sys
import time

import pytest

import unserial as u
from unserial import checker, storesim as ss

from conftest import rank_trap_history, random_history


def report(capsys, num, clauses):
    """Print one PASS/FAIL line for a criterion and assert it."""
    failed = [msg for ok, msg in clauses if not ok]
    line = 'criterion %d: %s' % (num, 'FAIL' if failed else 'PASS')
    if failed:
        line += ' (%s)' % '; '.join(failed)
    with capsys.disabled():
        print(line, file=sys.stderr, flush=True)
    assert not failed, line


def observe(workload, sessions, txns, seed):
    return ss.run_workload(ss.WorkloadProgram(workload), sessions, txns,
                           seed, ss.ReadPolicy(ss.LATEST_WRITER))


# --- shared corpus (criteria 5-8) -------------------------------------------

WORKLOADS = ('deposit-deposit', 'deposit-withdraw', 'voter',
             'smallbank-lite')


@pytest.fixture(scope='session')
def corpus():
    """500 observed executions with approx and exact prediction results."""
    items = []
    t0 = time.monotonic()
    for i in range(500):
        rng = random.Random(1000 + i)
        workload = WORKLOADS[i % len(WORKLOADS)]
        sessions = rng.randint(2, 4)
        # multi-transaction sessions only at the smallest width keeps
        # the whole corpus inside criterion 5's five-minute budget
        txns = rng.randint(1, 2) if sessions == 2 else 1
        level = u.CAUSAL if i % 2 == 0 else u.READ_COMMITTED
        _, history = observe(workload, sessions, txns, i)
        ps = u.predict(history, level, u.APPROX_STRICT)
        pr = u.predict(history, level, u.APPROX_RELAXED)
        items.append({'history': history, 'level': level,
                      'approx_strict': ps, 'approx_relaxed': pr})
    approx_seconds = time.monotonic() - t0
    for item in items:
        item['exact_strict'] = u.predict(item['history'], item['level'],
                                         u.EXACT_STRICT)
    return {'items': items, 'approx_seconds': approx_seconds}


# --- criteria ----------------------------------------------------------------

def test_criterion_1_motivating_pipeline(capsys):
    t0 = time.monotonic()
    clauses = []
    _, h = observe('deposit-deposit', 2, 1, 0)
    clauses.append((checker.check_serializable(h).kind == 'serializable',
                    'observed run not serializable'))
    relaxed = None
    for strategy in u.STRATEGIES:
        r = u.predict(h, u.CAUSAL, strategy)
        is_lost_update = (isinstance(r, u.PredictedHistory)
                   and r.changed_reads == [(2, 1, 'acc', 1, 0)])
        clauses.append((is_lost_update, '%s did not produce the t2-reads-acc-'
                        'from-t0 prediction' % strategy))
        if strategy == u.APPROX_RELAXED and is_lost_update:
            relaxed = r
    if relaxed is not None:
        rep = ss.validate(relaxed, ss.WorkloadProgram('deposit-deposit'),
                          2, 1, 0, u.CAUSAL)
        clauses.append((rep.outcome == 'ValidatedUnserializable',
                        'outcome %s' % rep.outcome))
        clauses.append((rep.diverged is False, 'unexpected divergence'))
        clauses.append((rep.final_state.get('acc') in (50, 60),
                        'balance %r' % rep.final_state.get('acc')))
    else:
        clauses.append((False, 'no relaxed prediction to validate'))
    clauses.append((time.monotonic() - t0 < 5.0, 'over 5 s'))
    report(capsys, 1, clauses)


def test_criterion_2_boundary_semantics(capsys):
    t0 = time.monotonic()
    clauses = []
    _, h = observe('deposit-withdraw', 2, 2, 4)
    strict = u.predict(h, u.CAUSAL, u.APPROX_STRICT)
    clauses.append((strict is None, 'approx-strict expected unsat'))
    relaxed = u.predict(h, u.CAUSAL, u.APPROX_RELAXED)
    clauses.append((isinstance(relaxed, u.PredictedHistory),
                    'approx-relaxed expected sat'))
    if isinstance(relaxed, u.PredictedHistory):
        rep = ss.validate(relaxed, ss.WorkloadProgram('deposit-withdraw'),
                          2, 2, 4, u.CAUSAL)
        clauses.append((rep.diverged is True, 'expected divergence'))
        clauses.append(('abort-rewind' in {r for (_t, _k, r) in rep.sites},
                        'expected an abort-rewind site'))
        clauses.append((rep.outcome == 'Serializable',
                        'outcome %s' % rep.outcome))
    clauses.append((time.monotonic() - t0 < 5.0, 'over 5 s'))
    report(capsys, 2, clauses)


def test_criterion_3_voter_asymmetry(capsys):
    t0 = time.monotonic()
    causal_sat = rc_sat = validated = 0
    for seed in range(10):
        _, h = observe('voter', 3, 4, seed)
        if isinstance(u.predict(h, u.CAUSAL, u.APPROX_RELAXED),
                      u.PredictedHistory):
            causal_sat += 1
        r = u.predict(h, u.READ_COMMITTED, u.APPROX_RELAXED)
        if isinstance(r, u.PredictedHistory):
            rc_sat += 1
            rep = ss.validate(r, ss.WorkloadProgram('voter'), 3, 4, seed,
                              u.READ_COMMITTED)
            if rep.outcome == 'ValidatedUnserializable':
                validated += 1
    report(capsys, 3, [
        (causal_sat == 0, 'causal sat-rate %d/10' % causal_sat),
        (rc_sat == 10, 'rc sat-rate %d/10' % rc_sat),
        (validated >= 9, 'only %d/10 validated' % validated),
        (time.monotonic() - t0 < 120.0, 'over 2 min'),
    ])


def test_criterion_4_oracle_equivalence(capsys):
    t0 = time.monotonic()
    mismatches = 0
    for seed in range(200):
        h = random_history(seed)
        if (checker.check_serializable(h).kind
                != checker.oracle_serializable(h).kind):
            mismatches += 1
    report(capsys, 4, [
        (mismatches == 0, '%d verdict mismatches' % mismatches),
        (time.monotonic() - t0 < 60.0, 'over 1 min'),
    ])


def test_criterion_5_approx_soundness(capsys, corpus):
    violations = 0
    for item in corpus['items']:
        for key in ('approx_strict', 'approx_relaxed'):
            pred = item[key]
            if isinstance(pred, u.PredictedHistory):
                if (checker.oracle_serializable(pred.history).kind
                        != 'unserializable'):
                    violations += 1
    trap_ok = all(u.predict(rank_trap_history(), level, strategy) is None
                  for level in (u.CAUSAL, u.READ_COMMITTED)
                  for strategy in (u.APPROX_STRICT, u.APPROX_RELAXED))
    report(capsys, 5, [
        (violations == 0, '%d serializable prefixes predicted' % violations),
        (trap_ok, 'the fixed three-transaction history was reported'),
        (corpus['approx_seconds'] < 300.0, 'over 5 min'),
    ])


def test_criterion_6_strategy_ordering(capsys, corpus):
    broken = 0
    exact_only = 0
    for item in corpus['items']:
        strict_sat = isinstance(item['approx_strict'], u.PredictedHistory)
        exact_sat = isinstance(item['exact_strict'], u.PredictedHistory)
        relaxed_sat = isinstance(item['approx_relaxed'], u.PredictedHistory)
        if strict_sat and not (exact_sat and relaxed_sat):
            broken += 1
        if exact_sat and not strict_sat:
            exact_only += 1
    print('criterion 6: exact-sat-but-approx-unsat count = %d' % exact_only,
          file=sys.stderr, flush=True)
    report(capsys, 6, [
        (broken == 0, '%d ordering violations' % broken),
        (exact_only == 0, '%d exact-only predictions' % exact_only),
    ])


def test_criterion_7_isolation_monotonicity(capsys, corpus):
    violations = 0
    histories = [item['history'] for item in corpus['items']]
    histories += [item[k].history for item in corpus['items']
                  for k in ('approx_strict', 'approx_relaxed',
                            'exact_strict')
                  if isinstance(item[k], u.PredictedHistory)]
    histories += [random_history(seed) for seed in range(200)]
    for h in histories:
        ser = bool(checker.check_serializable(h))
        causal = bool(checker.check_causal(h))
        rc = bool(checker.check_rc(h))
        if (ser and not causal) or (causal and not rc):
            violations += 1
    report(capsys, 7, [(violations == 0, '%d violations on %d histories'
                % (violations, len(histories)))])


def test_criterion_8_antidependency_theorem(capsys, corpus):
    violations = 0
    checked = 0
    for item in corpus['items']:
        h = item['history']
        v = checker.check_serializable(h)
        if v.kind != 'serializable' or not v.order:
            continue
        checked += 1
        co = {t: i for i, t in enumerate(v.order)}
        # anti-dependency: if t1 read k from tw and t2 also writes k after
        # tw, then t1 must commit before t2
        for key in h.keys:
            for (tw, t1) in h.wr.get(key, ()):
                for t2 in h.writers_of(key):
                    if t2 in (tw, t1):
                        continue
                    if co[tw] < co[t2] and not co[t1] < co[t2]:
                        violations += 1
    report(capsys, 8, [
        (checked > 0, 'no serializable verdicts with witnesses'),
        (violations == 0, '%d rw/co violations' % violations),
    ])


def test_criterion_9_determinism(capsys):
    def pipeline():
        out = []
        for workload, sessions, txns, seed, level in (
                ('deposit-deposit', 2, 1, 0, u.CAUSAL),
                ('deposit-withdraw', 2, 2, 4, u.CAUSAL),
                ('voter', 3, 4, 0, u.READ_COMMITTED)):
            trace, h = observe(workload, sessions, txns, seed)
            out.append(u.emit_trace(trace))
            pred = u.predict(h, level, u.APPROX_RELAXED)
            if isinstance(pred, u.PredictedHistory):
                out.append(u.emit_trace(pred.to_trace()))
                rep = ss.validate(pred, ss.WorkloadProgram(workload),
                                  sessions, txns, seed, level)
                out.append(u.emit_trace(rep.validating_trace))
                out.append(repr(sorted(rep.final_state.items())))
                out.append(rep.outcome)
        return out
    first, second = pipeline(), pipeline()
    report(capsys, 9, [(first == second, 'pipeline outputs differ between runs')])
