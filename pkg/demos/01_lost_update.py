"""Lost update, predicted from a clean run.

Two clients each deposit into the same account.  The run we observe is
serializable: the second deposit reads the first one's balance.  The
predictor then asks whether a causally consistent store could have served
the same program differently, and finds the classic lost update: both
deposits read the initial balance, and one update disappears.
"""

import unserial as u
from unserial import storesim as ss

# observe: a serial run of two single-deposit sessions
trace, history = ss.run_workload(
    ss.WorkloadProgram('deposit-deposit'), sessions=2, txns_per_session=1,
    seed=0, policy=ss.ReadPolicy(ss.LATEST_WRITER))
print('observed trace:')
print(u.emit_trace(trace))
print('observed verdict:', u.check_serializable(history).kind)

# predict: is there a feasible unserializable alternative under causal
# consistency?
pred = u.predict(history, u.CAUSAL, u.APPROX_RELAXED)
assert isinstance(pred, u.PredictedHistory)
print('\npredicted trace (boundaries mark where the prediction stops):')
print(u.emit_trace(pred.to_trace()))
for (tid, pos, key, old, new) in pred.changed_reads:
    print('txn %d now reads %s from txn %d instead of txn %d'
          % (tid, key, new, old))

# validate: replay the program, steering reads toward the prediction
report = ss.validate(pred, ss.WorkloadProgram('deposit-deposit'),
                     sessions=2, txns_per_session=1, seed=0, level=u.CAUSAL)
print('\nvalidation outcome:', report.outcome)
print('diverged:', report.diverged)
print('final balance:', report.final_state['acc'],
      '(a serial run would end at 110)')
