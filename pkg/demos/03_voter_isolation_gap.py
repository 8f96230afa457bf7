"""Where causal consistency is enough and read committed is not.

The voter workload increments a single counter behind a read-check-write
guard.  Causal consistency forces each session to see its own earlier
writes and everything those depended on, which turns out to rule out every
unserializable execution of this program.  Read committed does not, and
the predictor finds an anomaly for every seed.
"""

import unserial as u
from unserial import storesim as ss

causal_sat = 0
rc_sat = 0
validated = 0
for seed in range(10):
    _, history = ss.run_workload(
        ss.WorkloadProgram('voter'), sessions=3, txns_per_session=4,
        seed=seed, policy=ss.ReadPolicy(ss.LATEST_WRITER))

    if isinstance(u.predict(history, u.CAUSAL, u.APPROX_RELAXED),
                  u.PredictedHistory):
        causal_sat += 1

    pred = u.predict(history, u.READ_COMMITTED, u.APPROX_RELAXED)
    if isinstance(pred, u.PredictedHistory):
        rc_sat += 1
        report = ss.validate(pred, ss.WorkloadProgram('voter'),
                             sessions=3, txns_per_session=4, seed=seed,
                             level=u.READ_COMMITTED)
        if report.outcome == 'ValidatedUnserializable':
            validated += 1
        print('seed %d: rc prediction %s%s'
              % (seed, report.outcome,
                 ' (diverged)' if report.diverged else ''))
    else:
        print('seed %d: no rc prediction' % seed)

print('\ncausal predictions: %d/10' % causal_sat)
print('read-committed predictions: %d/10' % rc_sat)
print('validated as unserializable: %d/10' % validated)
