"""Bring your own workload: the script format and the weak-store fuzzer.

Workloads don't have to be builtins.  A small line-based script describes
sessions of transactions over a key-value store.  The first script here is
a guarded transfer showing the whole op set (get/put/abort_if); the second
is a contended counter that we fuzz: the store serves each read at random
among the writers a causally consistent store could legally expose, and we
count how often the result is unserializable.
"""

import unserial as u
from unserial import storesim as ss

TRANSFER = """
session 1
txn
put src 100
commit

session 2
txn
get src -> x
abort_if x < 10
put src x - 10
put dst 10
commit

session 3
txn
get src -> a
get dst -> b
put audit a + b
commit
"""

program = ss.parse_script(TRANSFER)
trace, history = ss.run_workload(program, sessions=3, txns_per_session=1,
                                 seed=0,
                                 policy=ss.ReadPolicy(ss.LATEST_WRITER))
print('serial run of the guarded transfer:')
print(u.emit_trace(trace))
print('verdict:', u.check_serializable(history).kind)

COUNTER = """
session 1
txn
get c -> x
put c x + 1
commit

session 2
txn
get c -> x
put c x + 1
commit

session 3
txn
get c -> x
put c x + 1
commit
"""

counter = ss.parse_script(COUNTER)
bad = 0
runs = 30
for i in range(runs):
    policy = ss.ReadPolicy(ss.RANDOM_WEAK, u.CAUSAL, rng_seed=i)
    _, h = ss.run_workload(counter, sessions=3, txns_per_session=1,
                           seed=0, policy=policy)
    if u.check_serializable(h).kind == 'unserializable':
        bad += 1
print('contended counter under random causally-legal reads: '
      '%d/%d runs unserializable' % (bad, runs))
