"""Markov-chain reading of the scheme: transition laws, policy costs, and
brute-force / Monte-Carlo oracles for the backward sweep.

Policies assign to each (step, vertex) a pair of indices into the
discretized control lists.  The chain moves by drawing one of the 2*N_sigma
characteristic branches uniformly and then one of the simplex vertices of
the landing point with its barycentric weight; Dirichlet exits absorb.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BadParams, TooLarge
from .mesh import Mesh
from .scheme import (
    Problem,
    SchemeParams,
    _classify,
    discrete_characteristics,
    n_steps,
    step_time,
)


@dataclass
class TransitionLaw:
    """Sparse probability row p_{k,i,.}(a,b) over vertex indices."""

    indices: np.ndarray
    probs: np.ndarray

    def sum(self) -> float:
        return float(self.probs.sum())


@dataclass
class _Branch:
    """One characteristic branch of the chain at a fixed (i, a, b)."""

    verts: np.ndarray = None
    weights: np.ndarray = None
    d_tilde: float = 0.0
    p: np.ndarray = None          # boundary point for the crossing cost
    exited: bool = False
    dirichlet: bool = False
    value: float = 0.0


class _ChainModel:
    """Caches branch geometry per (vertex, control pair).

    Only valid when the dynamics handles are time-independent, which holds
    for every oracle instance used here (asserted by the caller's data).
    """

    def __init__(self, problem: Problem, mesh: Mesh, params: SchemeParams):
        self.problem = problem
        self.mesh = mesh
        self.params = params
        self.N = n_steps(problem.T, params.dt)
        self.t_end = self.N * params.dt
        self._cache = {}

    def time(self, m: int) -> float:
        return step_time(self.problem, self.t_end, m, self.params.dt)

    def branches(self, i: int, ia: int, ib: int) -> list:
        key = (i, ia, ib)
        if key in self._cache:
            return self._cache[key]
        pr, mesh = self.problem, self.mesh
        a = pr.controls_a[ia]
        b = pr.controls_b[ib]
        x = mesh.vertices[i]
        t = self.time(0)
        out = []
        for y in discrete_characteristics(pr, t, x, a, self.params.dt):
            rp = _classify(pr, x, y, b, self.params.dt, self.params.c_bar, t=t)
            br = _Branch(exited=rp.exited, dirichlet=rp.dirichlet, value=rp.value)
            if not rp.dirichlet:
                br.verts, br.weights = mesh.interpolation_weights(rp.y_tilde)
                br.d_tilde = rp.d_tilde
                br.p = rp.p
            out.append(br)
        self._cache[key] = out
        return out

    def boundary_cost(self, m: int, i: int, ia: int, ib: int) -> float:
        """Expected crossing cost h at step m (Dirichlet data excluded)."""
        t = self.time(m)
        b = self.problem.controls_b[ib]
        acc = 0.0
        for br in self.branches(i, ia, ib):
            if br.exited and not br.dirichlet:
                acc += br.d_tilde * float(self.problem.g(t, br.p, b))
        return acc / (2 * self.problem.n_sigma)


def _policy_at(policy, m: int, i: int):
    if callable(policy):
        return policy(m, i)
    return policy[m][i]


def transition_law(problem: Problem, mesh: Mesh, k: int, i: int, a, b,
                   params: SchemeParams) -> TransitionLaw:
    """p_{k,i,j}(a,b) = (1/2Ns) sum_s psi_j(y_tilde^s).

    Rows are probability distributions; Dirichlet-absorbed branches make
    the row substochastic by their mass.
    """
    N = n_steps(problem.T, params.dt)
    t = step_time(problem, N * params.dt, k, params.dt)
    x = mesh.vertices[i]
    acc = {}
    for y in discrete_characteristics(problem, t, x, a, params.dt):
        rp = _classify(problem, x, y, b, params.dt, params.c_bar, t=t)
        if rp.dirichlet:
            continue
        vv, ww = mesh.interpolation_weights(rp.y_tilde)
        for j, w in zip(vv, ww):
            acc[int(j)] = acc.get(int(j), 0.0) + float(w)
    idx = np.array(sorted(acc), dtype=int)
    pr = np.array([acc[j] for j in idx]) / (2 * problem.n_sigma)
    return TransitionLaw(indices=idx, probs=pr)


def policy_cost(problem: Problem, mesh: Mesh, policy, k: int, i: int,
                params: SchemeParams, mode: str = "exact",
                n_paths: int = None, seed: int = 0):
    """Cost J_{k,i}(pi): running dt*f, crossing costs, terminal psi.

    exact mode propagates the full distribution vector and returns a float;
    monte_carlo simulates n_paths chains and returns (mean, stderr).
    """
    model = _ChainModel(problem, mesh, params)
    if mode == "exact":
        return _exact_cost(model, policy, k, i)
    if mode == "monte_carlo":
        if not n_paths or n_paths <= 0:
            raise BadParams("n_paths must be positive")
        vals = np.array([_simulate_path(model, policy, k, i, seed, path)[0]
                         for path in range(n_paths)])
        return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals)))
    raise BadParams(f"unknown mode {mode!r}")


def _exact_cost(model: _ChainModel, policy, k: int, i: int) -> float:
    pr, mesh, params = model.problem, model.mesh, model.params
    dt = params.dt
    rho = np.zeros(mesh.n_vertices)
    rho[i] = 1.0
    total = 0.0
    for m in range(k, model.N):
        t = model.time(m)
        nxt = np.zeros_like(rho)
        for j in np.nonzero(rho)[0]:
            w = rho[j]
            ia, ib = _policy_at(policy, m, j)
            a = pr.controls_a[ia]
            total += w * (dt * float(pr.f(t, mesh.vertices[j], a))
                          + model.boundary_cost(m, j, ia, ib))
            inv = 1.0 / (2 * pr.n_sigma)
            for br in model.branches(j, ia, ib):
                if br.dirichlet:
                    total += w * inv * br.value
                    continue
                for jj, bw in zip(br.verts, br.weights):
                    nxt[jj] += w * inv * float(bw)
        rho = nxt
    for j in np.nonzero(rho)[0]:
        total += rho[j] * float(pr.psi(mesh.vertices[j]))
    return float(total)


def _simulate_path(model: _ChainModel, policy, k: int, i: int,
                   seed: int, path: int):
    """One chain trajectory; returns (cost, boundary-layer step count)."""
    rng = np.random.Generator(np.random.Philox(key=[seed, path]))
    pr, mesh, params = model.problem, model.mesh, model.params
    dt = params.dt
    state = i
    cost = 0.0
    layer_steps = 0
    for m in range(k, model.N):
        t = model.time(m)
        ia, ib = _policy_at(policy, m, state)
        a = pr.controls_a[ia]
        b = pr.controls_b[ib]
        branches = model.branches(state, ia, ib)
        if any(br.exited for br in branches):
            layer_steps += 1
        cost += dt * float(pr.f(t, mesh.vertices[state], a))
        br = branches[rng.integers(0, len(branches))]
        if br.dirichlet:
            return cost + br.value, layer_steps
        if br.exited:
            cost += br.d_tilde * float(pr.g(t, br.p, b))
        u = rng.random()
        cum = 0.0
        nxt = int(br.verts[-1])
        for jj, w in zip(br.verts, br.weights):
            cum += float(w)
            if u < cum:
                nxt = int(jj)
                break
        state = nxt
    return cost + float(pr.psi(mesh.vertices[state])), layer_steps


def dp_oracle(problem: Problem, mesh: Mesh, params: SchemeParams,
              limit: float = 1e6) -> np.ndarray:
    """Min over all policies of the exact cost at k=0, by enumeration."""
    model = _ChainModel(problem, mesh, params)
    n = mesh.n_vertices
    P = len(problem.controls_a) * len(problem.controls_b)
    slots = n * model.N
    if P ** slots > limit:
        raise TooLarge(f"{P}^{slots} policies exceed the enumeration limit")
    nb = len(problem.controls_b)
    pairs = [(ia, ib) for ia in range(len(problem.controls_a)) for ib in range(nb)]
    best = np.full(n, np.inf)
    for flat in itertools.product(range(P), repeat=slots):
        policy = [[pairs[flat[m * n + j]] for j in range(n)]
                  for m in range(model.N)]
        vals = _policy_values(model, policy)
        best = np.minimum(best, vals)
    return best


def _policy_values(model: _ChainModel, policy) -> np.ndarray:
    """J_{0,i} for all i under one fixed policy (backward evaluation)."""
    pr, mesh, params = model.problem, model.mesh, model.params
    dt = params.dt
    J = np.array([float(pr.psi(x)) for x in mesh.vertices])
    for m in range(model.N - 1, -1, -1):
        t = model.time(m)
        new = np.empty_like(J)
        inv = 1.0 / (2 * pr.n_sigma)
        for j in range(mesh.n_vertices):
            ia, ib = _policy_at(policy, m, j)
            a = pr.controls_a[ia]
            acc = dt * float(pr.f(t, mesh.vertices[j], a))
            acc += model.boundary_cost(m, j, ia, ib)
            for br in model.branches(j, ia, ib):
                if br.dirichlet:
                    acc += inv * br.value
                else:
                    acc += inv * float(np.dot(J[br.verts], br.weights))
            new[j] = acc
        J = new
    return J


def estimate_sojourn(problem: Problem, mesh: Mesh, policy,
                     params: SchemeParams, n_paths: int, seed: int = 0):
    """Expected number of steps spent in the boundary layer Gamma_m(a).

    Gamma_m(a) holds the vertices with at least one exiting characteristic.
    Returns (mean, stderr) over n_paths simulated chains started at the
    vertex closest to the domain barycenter.
    """
    if not n_paths or n_paths <= 0:
        raise BadParams("n_paths must be positive")
    model = _ChainModel(problem, mesh, params)
    center = mesh.vertices.mean(axis=0)
    start = int(np.argmin(np.linalg.norm(mesh.vertices - center, axis=1)))
    counts = np.array([_simulate_path(model, policy, 0, start, seed, path)[1]
                       for path in range(n_paths)], dtype=float)
    return float(counts.mean()), float(counts.std(ddof=1) / math.sqrt(len(counts)))
