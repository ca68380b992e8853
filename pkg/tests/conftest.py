"""Shared test helpers: independent oracles and random contest generators."""

from dynblotto import (
    ContestSpec,
    CsfParams,
    History,
    Objective,
    allocations_at,
    csf_probability,
    terminal_payoff,
    terminal_status,
)


def brute_force_payoffs(profile, spec, history=None):
    """Independent payoff oracle: recursive enumeration over battle winners.

    Deliberately built from the public per-battle operations only, so it
    shares no code path with the streaming evaluator it cross-checks.
    """
    history = history if history is not None else History()
    status = terminal_status(spec, history)
    if status.terminal:
        return list(terminal_payoff(spec, history))
    allocations = allocations_at(profile, spec, history)
    out = [0.0] * spec.n
    for winner in range(spec.n):
        p = csf_probability(allocations, spec.csf, winner)
        if p == 0.0:
            continue
        sub = brute_force_payoffs(profile, spec, history.extend(allocations, winner))
        for i in range(spec.n):
            out[i] += p * sub[i]
    return out


def random_battle_values(rng, m, lo=0.5, hi=3.0):
    """Battle values in [lo, hi] with no battle worth the rest combined."""
    while True:
        values = [rng.uniform(lo, hi) for _ in range(m)]
        total = sum(values)
        if all(v < total - v for v in values):
            return values


def random_ev_spec(rng, alphas=(1.0,), betas=(1.0,), with_shocks=False,
                   ns=(2, 3, 4), ms=(3, 4, 5)):
    """Random expected-value contest in the property-suite parameter ranges."""
    n = rng.choice(ns)
    m = rng.choice(ms)
    values = random_battle_values(rng, m)
    budgets = [rng.uniform(0.0, 100.0) for _ in range(n)]
    shocks = {}
    if with_shocks:
        for _ in range(rng.randint(1, n)):
            shocks[(rng.randrange(n), rng.randint(1, m))] = rng.uniform(-20.0, 20.0)
    csf = CsfParams(rng.choice(alphas), rng.choice(betas))
    return ContestSpec(values, budgets, csf, Objective.EXPECTED_VALUE, shocks)
