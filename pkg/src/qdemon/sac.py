"""Soft actor-critic over one discrete and one continuous action channel.

The policy net maps an encoded state to 9 outputs: 3 softmax logits for the
discrete branch probabilities, and per-branch (mu_d, m_d) of a squashed
Gaussian with sigma_d = sqrt(m_d^2 + 1e-8).  Twin critics (plus Polyak-tracked
targets) map (state, u) to one Q value per discrete branch.  Temperatures
alpha_D = exp(beta_D) and alpha_C = exp(beta_C) are tuned by plain SGD toward
scheduled entropy targets; Q and policy losses use the adaptive-moment
optimizer.  Entropy bookkeeping treats the continuous action as living in
[-1, 1] regardless of the actual control interval.

All gradients are computed by explicit reverse-mode accumulation (see
``nets``); the finite-difference suite in the tests pins every path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import nets
from .environments import (
    Env,
    EnvState,
    HybridAction,
    Metrics,
    RegimeConfig,
    encode_state,
    evaluate_policy,
)
from .presets import Hyperparams

SIGMA_EPS = 1e-8
LOG_2PI = math.log(2.0 * math.pi)
N_DISCRETE = 3


class TrainingDiverged(RuntimeError):
    """A loss or temperature became non-finite during training."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class EntropySchedule:
    start: float
    end: float
    decay: float

    def value(self, n: int) -> float:
        return self.end + (self.start - self.end) * math.exp(-n / self.decay)


class TemperaturePair:
    """Log-parameterized entropy temperatures, positive by construction.

    The log values are clamped to a wide band as an overflow guard; the SGD
    dynamics stay well inside it once the entropy targets are reachable.
    """

    BETA_MIN = -20.0
    BETA_MAX = 5.0

    def __init__(self, beta_d: float = 0.0, beta_c: float = 0.0):
        self.beta_d = beta_d
        self.beta_c = beta_c

    def sgd_step(self, lr: float, grad_d: float, grad_c: float) -> None:
        self.beta_d = min(max(self.beta_d - lr * grad_d, self.BETA_MIN), self.BETA_MAX)
        self.beta_c = min(max(self.beta_c - lr * grad_c, self.BETA_MIN), self.BETA_MAX)

    @property
    def alpha_d(self) -> float:
        return math.exp(self.beta_d)

    @property
    def alpha_c(self) -> float:
        return math.exp(self.beta_c)


class ReplayBuffer:
    """Fixed-capacity FIFO store of one-step transitions."""

    def __init__(self, capacity: int, state_dim: int):
        self.capacity = capacity
        self.s = np.zeros((capacity, state_dim))
        self.d = np.zeros(capacity, dtype=np.int64)
        self.u = np.zeros(capacity)
        self.r = np.zeros(capacity)
        self.s2 = np.zeros((capacity, state_dim))
        self.cursor = 0
        self.size = 0

    def add(self, s, d, u, r, s2) -> None:
        i = self.cursor
        self.s[i] = s
        self.d[i] = d
        self.u[i] = u
        self.r[i] = r
        self.s2[i] = s2
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.choice(self.size, size=batch_size, replace=False)
        return self.s[idx], self.d[idx], self.u[idx], self.r[idx], self.s2[idx]


class PolicyOut(NamedTuple):
    logits: np.ndarray
    pi_d: np.ndarray
    log_pi_d: np.ndarray
    mu: np.ndarray
    m: np.ndarray
    sigma: np.ndarray
    cache: tuple


def softmax_rows(logits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    log_p = shifted - log_z
    return np.exp(log_p), log_p


def log_one_minus_tanh_sq(x: np.ndarray) -> np.ndarray:
    """Numerically stable ``log(1 - tanh(x)^2)``."""
    return 2.0 * (math.log(2.0) - x - np.logaddexp(0.0, -2.0 * x))


def squash(x, lo: float, hi: float):
    return lo + 0.5 * (hi - lo) * (1.0 + np.tanh(x))


def continuous_log_prob(mu: float, sigma: float, u, lo: float, hi: float) -> np.ndarray:
    """Log density over the actual control interval [lo, hi] of the squashed
    Gaussian with pre-squash mean mu and scale sigma."""
    width = 0.5 * (hi - lo)
    y = np.clip((np.asarray(u, dtype=float) - lo) / width - 1.0, -1.0 + 1e-15, 1.0 - 1e-15)
    x = np.arctanh(y)
    log_norm = -((x - mu) ** 2) / (2.0 * sigma**2) - math.log(sigma) - 0.5 * LOG_2PI
    return log_norm - log_one_minus_tanh_sq(x) - math.log(width)


class SacAgent:
    """Policy head, twin critics with targets, optimizers, and temperatures."""

    def __init__(
        self,
        state_dim: int,
        u_bounds: tuple[float, float],
        hyper: Hyperparams,
        rng: np.random.Generator,
    ):
        self.state_dim = state_dim
        self.u_lo, self.u_hi = float(u_bounds[0]), float(u_bounds[1])
        self.hyper = hyper
        self.dtype = np.dtype(hyper.dtype)
        h1, h2 = hyper.hidden
        self.policy = nets.init_mlp([state_dim, h1, h2, 3 * N_DISCRETE], rng, dtype=self.dtype)
        self.critics = nets.init_mlp(
            [state_dim + 1, h1, h2, N_DISCRETE], rng, stack=2, dtype=self.dtype
        )
        self.targets = nets.copy_params(self.critics)
        self.adam_policy = nets.Adam(self.policy, hyper.adam_lr)
        self.adam_critics = nets.Adam(self.critics, hyper.adam_lr)
        self.temps = TemperaturePair()
        self.updates_done = 0

    # --- policy -----------------------------------------------------------

    def policy_forward(self, s: np.ndarray) -> PolicyOut:
        out, cache = nets.mlp_forward(self.policy, np.asarray(s, dtype=self.dtype))
        logits = out[..., :N_DISCRETE]
        mu = out[..., N_DISCRETE : 2 * N_DISCRETE]
        m = out[..., 2 * N_DISCRETE :]
        pi_d, log_pi_d = softmax_rows(logits)
        sigma = np.sqrt(m**2 + SIGMA_EPS)
        return PolicyOut(logits, pi_d, log_pi_d, mu, m, sigma, cache)

    def _unit_log_prob(self, xi: np.ndarray, sigma: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Log density of the squashed variable on [-1, 1] at x = mu + sigma*xi."""
        return -0.5 * xi**2 - np.log(sigma) - 0.5 * LOG_2PI - log_one_minus_tanh_sq(x)

    def act(
        self, enc_state: np.ndarray, rng: np.random.Generator, deterministic: bool = False
    ) -> tuple[int, float]:
        po = self.policy_forward(enc_state[None, :])
        if deterministic:
            d = int(np.argmax(po.pi_d[0]))
            u = float(squash(po.mu[0, d], self.u_lo, self.u_hi))
        else:
            d = int(rng.choice(N_DISCRETE, p=po.pi_d[0]))
            xi = rng.standard_normal()
            u = float(squash(po.mu[0, d] + po.sigma[0, d] * xi, self.u_lo, self.u_hi))
        return d, u

    def sample_action(self, enc_state: np.ndarray, rng: np.random.Generator):
        """Sample (d, u, log pi_D(d|s), log pi_C(u|d,s)) with the continuous
        log density taken over the actual interval [u_lo, u_hi]."""
        po = self.policy_forward(enc_state[None, :])
        d = int(rng.choice(N_DISCRETE, p=po.pi_d[0]))
        xi = rng.standard_normal()
        x = po.mu[0, d] + po.sigma[0, d] * xi
        u = float(squash(x, self.u_lo, self.u_hi))
        log_pc = float(
            self._unit_log_prob(np.array(xi), po.sigma[0, d], np.array(x))
            - math.log(0.5 * (self.u_hi - self.u_lo))
        )
        return d, u, float(po.log_pi_d[0, d]), log_pc

    # --- critics ----------------------------------------------------------

    def _branch_inputs(self, s: np.ndarray, u_branches: np.ndarray) -> np.ndarray:
        """(B, n) states and (B, 3) per-branch controls -> (3B, n+1) inputs."""
        b = s.shape[0]
        tiled = np.repeat(s[:, None, :], N_DISCRETE, axis=1)
        arr = np.concatenate([tiled, u_branches[:, :, None]], axis=2)
        return arr.reshape(b * N_DISCRETE, self.state_dim + 1)

    def _branch_q(self, params: nets.Params, s: np.ndarray, u_branches: np.ndarray):
        """Q(s, u_d, d) for every branch d; returns ((2, B, 3), cache)."""
        b = s.shape[0]
        x = self._branch_inputs(s, u_branches)
        q_all, cache = nets.mlp_forward(params, x)
        q = np.einsum("kbdd->kbd", q_all.reshape(2, b, N_DISCRETE, N_DISCRETE))
        return q, cache

    def q_values(self, s: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Live critic outputs, shape (2, B, 3)."""
        x = np.concatenate([s, u[:, None]], axis=1).astype(self.dtype)
        q, _ = nets.mlp_forward(self.critics, x)
        return q

    # --- losses -------------------------------------------------------------

    def critic_loss(self, batch: tuple, rng: np.random.Generator):
        """Squared Bellman error of both critics against the shared target
        ``y = r + gamma E[min_j Q_targ + alpha_D H_D + alpha_C H_C]``.

        The expectation enumerates the discrete branches of fresh policy
        samples at s'; target parameters are not differentiated through.
        Returns (loss, grads, y).
        """
        s, d, u, r, s2 = batch
        hyper = self.hyper
        batch_size = s.shape[0]
        alpha_d, alpha_c = self.temps.alpha_d, self.temps.alpha_c

        po2 = self.policy_forward(s2)
        xi2 = rng.standard_normal((batch_size, N_DISCRETE), dtype=self.dtype)
        x2 = po2.mu + po2.sigma * xi2
        u2 = squash(x2, self.u_lo, self.u_hi)
        log_pc2 = self._unit_log_prob(xi2, po2.sigma, x2)
        qt, _ = self._branch_q(self.targets, s2, u2)
        qt_min = qt.min(axis=0)
        h_d2 = -(po2.pi_d * po2.log_pi_d).sum(axis=1)
        y = r + hyper.gamma * (
            (po2.pi_d * (qt_min - alpha_c * log_pc2)).sum(axis=1) + alpha_d * h_d2
        )

        x_in = np.concatenate([s, u[:, None]], axis=1)
        q_all, cache_q = nets.mlp_forward(self.critics, x_in)
        rows = np.arange(batch_size)
        d_idx = d.astype(np.int64)
        q_sel = q_all[:, rows, d_idx]
        err = q_sel - y
        loss_q = float((err**2).mean(axis=1).sum())
        dy_q = np.zeros_like(q_all)
        dy_q[:, rows, d_idx] = 2.0 * err / batch_size
        grads_q, _ = nets.mlp_backward(self.critics, cache_q, dy_q)
        return loss_q, grads_q, y

    def policy_loss(self, batch: tuple, rng: np.random.Generator):
        """Expected ``sum_d pi_D (alpha_D log pi_D + alpha_C log pi_C - min_j Q)``
        with one reparameterized continuous sample per (state, branch) and the
        critics held constant.  Returns (loss, grads, diagnostics)."""
        s = batch[0]
        batch_size = s.shape[0]
        width = 0.5 * (self.u_hi - self.u_lo)
        alpha_d, alpha_c = self.temps.alpha_d, self.temps.alpha_c

        po = self.policy_forward(s)
        xi = rng.standard_normal((batch_size, N_DISCRETE), dtype=self.dtype)
        x = po.mu + po.sigma * xi
        t = np.tanh(x)
        u_br = self.u_lo + width * (1.0 + t)
        log_pc = self._unit_log_prob(xi, po.sigma, x)
        q_br, cache_pi = self._branch_q(self.critics, s, u_br)
        q_min = q_br.min(axis=0)
        winner = q_br.argmin(axis=0)

        bracket = alpha_d * po.log_pi_d + alpha_c * log_pc - q_min
        loss_pi = float((po.pi_d * bracket).mean(axis=0).sum())

        # gradient through the softmax weights and the log pi_D term combined
        d_logits = po.pi_d * (bracket - (po.pi_d * bracket).sum(axis=1, keepdims=True)) / batch_size
        # dL/du through the winning critic's input gradient
        dy_pi = np.zeros((2, batch_size * N_DISCRETE, N_DISCRETE), dtype=self.dtype)
        flat = np.arange(batch_size * N_DISCRETE)
        branch = np.tile(np.arange(N_DISCRETE), batch_size)
        dy_pi[winner.reshape(-1), flat, branch] = (-po.pi_d / batch_size).reshape(-1)
        _, dx_pi = nets.mlp_backward(self.critics, cache_pi, dy_pi, need_param_grads=False)
        du = dx_pi.sum(axis=0)[:, -1].reshape(batch_size, N_DISCRETE)

        d_log_pc = alpha_c * po.pi_d / batch_size
        jac = width * (1.0 - t**2)
        d_mu = d_log_pc * (2.0 * t) + du * jac
        d_sigma = d_log_pc * (-1.0 / po.sigma + 2.0 * t * xi) + du * jac * xi
        d_m = d_sigma * (po.m / po.sigma)
        d_out = np.concatenate([d_logits, d_mu, d_m], axis=1)
        grads_p, _ = nets.mlp_backward(self.policy, po.cache, d_out)

        h_d = float(-(po.pi_d * po.log_pi_d).sum(axis=1).mean())
        log_gauss = -0.5 * xi**2 - np.log(po.sigma) - 0.5 * LOG_2PI
        h_c = float((po.pi_d * (-log_gauss)).sum(axis=1).mean())
        return loss_pi, grads_p, {"h_d": h_d, "h_c": h_c}

    def temperature_gradients(
        self, batch: tuple, rng: np.random.Generator, h_d_target: float, h_c_target: float
    ):
        """d/d beta of ``L = alpha(beta) E[H_realized - H_target]`` per head.

        The realized continuous entropy is estimated from the pre-squash
        Gaussian density: the scheduled targets start above log 2, which no
        squashed density on [-1, 1] can reach, so the controller tracks the
        Gaussian head.  Positive realized-minus-target entropy lowers alpha.
        """
        s = batch[0]
        po = self.policy_forward(s)
        xi = rng.standard_normal((s.shape[0], N_DISCRETE), dtype=self.dtype)
        h_d = float(-(po.pi_d * po.log_pi_d).sum(axis=1).mean())
        log_gauss = -0.5 * xi**2 - np.log(po.sigma) - 0.5 * LOG_2PI
        h_c = float((po.pi_d * (-log_gauss)).sum(axis=1).mean())
        grad_d = self.temps.alpha_d * (h_d - h_d_target)
        grad_c = self.temps.alpha_c * (h_c - h_c_target)
        return grad_d, grad_c, h_d, h_c

    # --- one optimization step --------------------------------------------

    def update(
        self,
        buffer: ReplayBuffer,
        h_d_target: float,
        h_c_target: float,
        rng: np.random.Generator,
    ) -> dict:
        hyper = self.hyper
        s, d, u, r, s2 = buffer.sample(hyper.batch_size, rng)
        batch = (
            s.astype(self.dtype),
            d,
            u.astype(self.dtype),
            r.astype(self.dtype),
            s2.astype(self.dtype),
        )

        loss_q, grads_q, _ = self.critic_loss(batch, rng)
        self.adam_critics.step(self.critics, grads_q)

        loss_pi, grads_p, ent = self.policy_loss(batch, rng)
        self.adam_policy.step(self.policy, grads_p)

        # temperature SGD toward the scheduled entropy targets, reusing the
        # policy-loss entropy estimates for this batch
        grad_d = self.temps.alpha_d * (ent["h_d"] - h_d_target)
        grad_c = self.temps.alpha_c * (ent["h_c"] - h_c_target)
        self.temps.sgd_step(hyper.sgd_lr, grad_d, grad_c)

        nets.polyak_update(self.targets, self.critics, hyper.polyak)
        self.updates_done += 1

        if not (
            math.isfinite(loss_q)
            and math.isfinite(loss_pi)
            and math.isfinite(self.temps.beta_d)
            and math.isfinite(self.temps.beta_c)
        ):
            raise TrainingDiverged(
                "non-finite loss or temperature",
                {
                    "loss_q": loss_q,
                    "loss_pi": loss_pi,
                    "beta_d": self.temps.beta_d,
                    "beta_c": self.temps.beta_c,
                    "updates_done": self.updates_done,
                },
            )
        return {
            "loss_q": loss_q,
            "loss_pi": loss_pi,
            "h_d": ent["h_d"],
            "h_c": ent["h_c"],
            "alpha_d": self.temps.alpha_d,
            "alpha_c": self.temps.alpha_c,
        }


class SacPolicy:
    """Adapter exposing a trained agent through the environment Policy protocol."""

    def __init__(self, agent: SacAgent, deterministic: bool = False):
        self.agent = agent
        self.deterministic = deterministic

    def __call__(self, state: EnvState, rng: np.random.Generator) -> HybridAction:
        d, u = self.agent.act(encode_state(state), rng, self.deterministic)
        return HybridAction(d, u)


@dataclass
class CurveRow:
    step: int
    avg_power: float
    avg_dissipation: float
    efficiency: float | None
    loss_q: float
    loss_pi: float
    alpha_d: float
    alpha_c: float


def train(
    config: RegimeConfig,
    hyper: Hyperparams,
    seed: int,
    on_eval=None,
) -> tuple[SacAgent, list[CurveRow], dict]:
    """Run one training job; deterministic under (config, hyper, seed).

    ``on_eval`` is called with each periodic CurveRow.  Raises
    :class:`TrainingDiverged` on a non-finite loss.  The third return value
    carries run bookkeeping (seed, buffer cursor, final rng states).
    """
    root = np.random.SeedSequence(seed)
    init_ss, env_ss, action_ss, batch_ss, eval_ss = root.spawn(5)
    init_rng = np.random.default_rng(init_ss)
    env_rng = np.random.default_rng(env_ss)
    action_rng = np.random.default_rng(action_ss)
    batch_rng = np.random.default_rng(batch_ss)

    env = Env(config)
    state = env.reset(env_rng)
    agent = SacAgent(config.encoded_length, (config.u_min, config.u_max), hyper, init_rng)
    buffer = ReplayBuffer(hyper.buffer_size, config.encoded_length)
    sched_d = EntropySchedule(hyper.hd_start, hyper.hd_end, hyper.hd_decay)
    sched_c = EntropySchedule(hyper.hc_start, hyper.hc_end, hyper.hc_decay)

    curves: list[CurveRow] = []
    latest = {"loss_q": math.nan, "loss_pi": math.nan}
    for step_i in range(1, hyper.steps + 1):
        enc = encode_state(state)
        if step_i <= hyper.init_random_steps:
            d = int(action_rng.integers(N_DISCRETE))
            u = float(action_rng.uniform(config.u_min, config.u_max))
        else:
            d, u = agent.act(enc, action_rng)
        out = env.step(HybridAction(d, u), env_rng)
        buffer.add(enc, d, u, out.reward, encode_state(out.next))
        state = out.next

        if step_i >= hyper.first_update_step and step_i % hyper.n_updates == 0:
            h_d_t = sched_d.value(step_i)
            h_c_t = sched_c.value(step_i)
            for _ in range(hyper.n_updates):
                latest = agent.update(buffer, h_d_t, h_c_t, batch_rng)

        if step_i % hyper.eval_every == 0:
            eval_rng = np.random.default_rng(eval_ss.spawn(1)[0])
            metrics = evaluate_policy(SacPolicy(agent), config, hyper.eval_steps, eval_rng)
            row = CurveRow(
                step=step_i,
                avg_power=metrics.avg_power,
                avg_dissipation=metrics.avg_dissipation,
                efficiency=metrics.efficiency,
                loss_q=latest.get("loss_q", math.nan),
                loss_pi=latest.get("loss_pi", math.nan),
                alpha_d=agent.temps.alpha_d,
                alpha_c=agent.temps.alpha_c,
            )
            curves.append(row)
            if on_eval is not None:
                on_eval(row)

    info = {
        "seed": seed,
        "buffer_cursor": buffer.cursor,
        "buffer_fill": buffer.size,
        "env_rng_state": repr(env_rng.bit_generator.state),
        "action_rng_state": repr(action_rng.bit_generator.state),
        "batch_rng_state": repr(batch_rng.bit_generator.state),
    }
    return agent, curves, info


def final_metrics(
    agent: SacAgent,
    config: RegimeConfig,
    n_steps: int,
    seed: int,
    deterministic: bool = False,
) -> Metrics:
    """Long evaluation rollout of a trained agent."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5EED]))
    return evaluate_policy(SacPolicy(agent, deterministic), config, n_steps, rng)
