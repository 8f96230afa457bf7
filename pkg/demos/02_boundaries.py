"""Strict versus relaxed prediction boundaries.

A prediction changes what some reads return, so every event that might be
affected by a changed read has to be cut away.  The strict boundary cuts a
session at the first affected read; the relaxed boundary keeps the rest of
that transaction and trusts validation to sort it out.

This workload interleaves a withdrawal between two deposits.  Under strict
boundaries no unserializable prefix survives the cut, and the predictor
honestly answers unsat.  Under relaxed boundaries it predicts a lost
update, but replaying the program shows the withdrawal taking a different
branch (it aborts for lack of funds), so validation reports a divergence
and the prediction does not stand.
"""

import unserial as u
from unserial import storesim as ss

trace, history = ss.run_workload(
    ss.WorkloadProgram('deposit-withdraw'), sessions=2, txns_per_session=2,
    seed=4, policy=ss.ReadPolicy(ss.LATEST_WRITER))
print('observed trace:')
print(u.emit_trace(trace))

strict = u.predict(history, u.CAUSAL, u.APPROX_STRICT)
print('strict prediction:', 'unsat' if strict is None else 'sat')

relaxed = u.predict(history, u.CAUSAL, u.APPROX_RELAXED)
assert isinstance(relaxed, u.PredictedHistory)
print('relaxed prediction boundaries:', relaxed.boundaries)
print(u.emit_trace(relaxed.to_trace()))

report = ss.validate(relaxed, ss.WorkloadProgram('deposit-withdraw'),
                     sessions=2, txns_per_session=2, seed=4, level=u.CAUSAL)
print('validation outcome:', report.outcome)
print('diverged:', report.diverged)
for (tid, key, reason) in report.sites:
    print('  divergence at txn %s: %s' % (tid, reason))
print('final balance:', report.final_state['acc'])
