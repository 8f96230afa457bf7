"""Isolation checks for a fixed history.

Serializability is decided with the constraint backend: one integer
commit-order variable per transaction, hb forcing co order, and the
arbitration rule per key.  Causal and read-committed conformance collapse
to cycle detection because the arbitration relations ww_causal and ww_rc
are fully determined once the history is fixed.
"""

from dataclasses import dataclass

from .history import T0
from . import solver
from .solver import SolverUnknown


class TooLarge(Exception):
    pass


@dataclass
class Verdict:
    kind: str  # 'serializable' | 'unserializable' | 'conforms' | 'violates'
    order: list | None = None   # CommitOrder for 'serializable'
    cycle: list | None = None   # edge list for 'violates'

    def __bool__(self):
        return self.kind in ('serializable', 'conforms')


def check_serializable(history, timeout=None):
    txns = history.committed()
    if len(txns) <= 1:
        return Verdict('serializable', order=list(txns))
    prog = solver.Program()
    co = {t: prog.int_var('co[%d]' % t) for t in txns}
    for (a, b) in sorted(history.hb()):
        prog.add(solver.lt(co[a], co[b]))
    for key in history.keys:
        writers = history.writers_of(key)
        for (t2, t3) in sorted(history.wr.get(key, ())):
            for t1 in writers:
                if t1 == t2 or t1 == t3:
                    continue
                prog.add(solver.implies(solver.lt(co[t1], co[t3]),
                                        solver.lt(co[t1], co[t2])))
    prog.add(solver.distinct(*[co[t] for t in txns]))
    res = solver.check_sat(prog, timeout=timeout)
    if res.status == 'unknown':
        raise SolverUnknown(res.reason)
    if res.status == 'unsat':
        return Verdict('unserializable')
    order = sorted(txns, key=lambda t: (res.model[co[t]], t))
    return Verdict('serializable', order=order)


def oracle_serializable(history):
    """Brute-force serial-execution search, independent of the solver."""
    txns = [t for t in history.committed() if t != T0]
    if len(txns) > 9:
        raise TooLarge('%d committed transactions exceed the oracle guard'
                       % len(txns))

    sess_pred = {}
    for ts in history.sessions.values():
        for a, b in zip(ts, ts[1:]):
            sess_pred[b] = a

    last_writer = {k: T0 for k in history.keys}

    def place(remaining, placed, last_writer, order):
        if not remaining:
            return list(order)
        for t in sorted(remaining):
            pred = sess_pred.get(t)
            if pred is not None and pred not in placed:
                continue
            txn = history.txns[t]
            ok = True
            for e in txn.events:
                if e.kind == 'r' and last_writer[e.key] != e.writer:
                    ok = False
                    break
            if not ok:
                continue
            undo = {}
            for e in txn.events:
                if e.kind == 'w':
                    undo.setdefault(e.key, last_writer[e.key])
                    last_writer[e.key] = t
            placed.add(t)
            order.append(t)
            found = place(remaining - {t}, placed, last_writer, order)
            order.pop()
            placed.remove(t)
            for k, w in undo.items():
                last_writer[k] = w
            if found is not None:
                return found
        return None

    found = place(set(txns), set(), last_writer, [])
    if found is None:
        return Verdict('unserializable')
    return Verdict('serializable', order=[T0] + found)


def _shortest_cycle(edges):
    """Shortest cycle by edge count, ties by smallest lexicographic edge.

    edges: dict (a, b) -> label.  Returns a list of (a, b, label) or None.
    """
    succ = {}
    for (a, b) in edges:
        succ.setdefault(a, []).append(b)
    for s in succ.values():
        s.sort()
    best = None
    for start in sorted(succ):
        # BFS back to start
        parents = {start: None}
        queue = [start]
        qi = 0
        found = None
        while qi < len(queue):
            n = queue[qi]
            qi += 1
            for m in succ.get(n, ()):
                if m == start:
                    found = n
                    qi = len(queue)
                    break
                if m not in parents:
                    parents[m] = n
                    queue.append(m)
        if found is None:
            continue
        path = [start]
        n = found
        rev = []
        while n != start:
            rev.append(n)
            n = parents[n]
        path.extend(reversed(rev))
        cyc = [(path[i], path[(i + 1) % len(path)]) for i in range(len(path))]
        key = (len(cyc), sorted(cyc))
        if best is None or key < best[0]:
            best = (key, cyc)
    if best is None:
        return None
    return [(a, b, edges[(a, b)]) for (a, b) in best[1]]


def _conformance(history, ww_edges):
    edges = {}
    for (a, b) in history.so_pairs():
        edges[(a, b)] = 'so'
    for key in history.keys:
        for (a, b) in history.wr.get(key, ()):
            edges[(a, b)] = 'wr_%s' % key
    for (a, b), label in ww_edges.items():
        edges.setdefault((a, b), label)
    cycle = _shortest_cycle(edges)
    if cycle is None:
        return Verdict('conforms')
    return Verdict('violates', cycle=cycle)


def ww_causal_edges(history):
    hb = history.hb()
    edges = {}
    for key in history.keys:
        writers = history.writers_of(key)
        readers = sorted(history.wr.get(key, ()))
        for (t2, t3) in readers:
            for t1 in writers:
                if t1 in (t2, t3):
                    continue
                if (t1, t3) in hb:
                    edges[(t1, t2)] = 'ww'
    return edges


def ww_rc_edges(history):
    edges = {}
    for t3 in history.committed():
        txn = history.txns[t3]
        reads = txn.reads()
        for i, beta in enumerate(reads):
            for alpha in reads[i + 1:]:
                t1, t2 = beta.writer, alpha.writer
                if t1 == t2:
                    continue
                k = alpha.key
                if history.wrpos_k(t1, k) is None:
                    continue
                edges[(t1, t2)] = 'ww'
    return edges


def check_causal(history):
    return _conformance(history, ww_causal_edges(history))


def check_rc(history):
    return _conformance(history, ww_rc_edges(history))
