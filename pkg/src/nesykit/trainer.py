"""Desk-scale training harness for constraint-aware models.

Two demonstrations built on the circuit queries:

- supervised structured prediction (grid shortest paths, preference
  ranking) trained with cross-entropy plus weighted semantic loss and an
  optional entropy term, and
- a small constrained GAN over tile grids whose generator loss adds a
  ramped semantic-loss term on top of the adversarial objective.

Everything is plain numpy and bit-reproducible given (seed, config).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import AND, CFALSE, CTRUE, LIT, OR, Circuit, verify_query_structure
from .constraints import PATH_CAP, GridSpec, simple_path
from .formula import Formula, or_
from .queries import batch_query, batch_training_losses, clamp_probs

ENTROPY_MODES = ("none", "full", "nesy")


# ---------------------------------------------------------------------------
# model and optimizer

class Mlp:
    """Fully connected net: relu hidden layers, sigmoid outputs."""

    def __init__(self, widths, rng):
        if len(widths) < 2:
            raise ValueError("an Mlp needs at least input and output widths")
        self.widths = tuple(int(w) for w in widths)
        self.weights = []
        self.biases = []
        last = len(self.widths) - 2
        for k, (fan_in, fan_out) in enumerate(zip(self.widths, self.widths[1:])):
            scale = math.sqrt((1.0 if k == last else 2.0) / fan_in)
            self.weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    def forward(self, x):
        """Probabilities (B, out) plus the cache backward() needs."""
        h = np.asarray(x, dtype=np.float64)
        if h.ndim != 2 or h.shape[1] != self.widths[0]:
            raise ValueError(
                f"expected input shape (B, {self.widths[0]}), got {h.shape}"
            )
        acts = [h]
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w + b, 0.0)
            acts.append(h)
        logits = acts[-1] @ self.weights[-1] + self.biases[-1]
        probs = 1.0 / (1.0 + np.exp(-logits))
        return probs, (acts, probs)

    def predict(self, x):
        return self.forward(x)[0]

    def backward(self, cache, dprobs=None, dlogits=None):
        """Parameter grads and input grad for a scalar loss.

        Supply the loss gradient either w.r.t. the output probabilities or
        directly w.r.t. the output logits (the two add if both are given).
        """
        acts, probs = cache
        delta = np.zeros_like(probs)
        if dprobs is not None:
            delta += dprobs * probs * (1.0 - probs)
        if dlogits is not None:
            delta += dlogits
        grads = [None] * len(self.weights)
        for k in range(len(self.weights) - 1, -1, -1):
            grads[k] = (acts[k].T @ delta, delta.sum(axis=0))
            da = delta @ self.weights[k].T
            delta = da * (acts[k] > 0) if k > 0 else da
        return grads, delta


class Adam:
    """Standard Adam over an Mlp's weight/bias lists."""

    def __init__(self, model: Mlp, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = [(np.zeros_like(w), np.zeros_like(b))
                  for w, b in zip(model.weights, model.biases)]
        self.v = [(np.zeros_like(w), np.zeros_like(b))
                  for w, b in zip(model.weights, model.biases)]

    def step(self, model: Mlp, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, (gw, gb) in enumerate(grads):
            for slot, g, param in ((0, gw, model.weights[k]),
                                   (1, gb, model.biases[k])):
                m = self.m[k][slot]
                v = self.v[k][slot]
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                v *= self.beta2
                v += (1.0 - self.beta2) * g * g
                param -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


# ---------------------------------------------------------------------------
# configs, metrics, datasets

@dataclass(frozen=True)
class TrainConfig:
    seed: int = 0
    epochs: int = 30
    batch_size: int = 32
    lr: float = 1e-3
    lambda_sl: float = 0.0
    lambda_ent: float = 0.0
    entropy: str = "none"
    hidden: tuple = (128, 128)

    def __post_init__(self):
        if self.lambda_sl < 0 or self.lambda_ent < 0:
            raise ValueError("loss weights must be >= 0")
        if self.entropy not in ENTROPY_MODES:
            raise ValueError(f"entropy mode must be one of {ENTROPY_MODES}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


@dataclass(frozen=True)
class Metrics:
    """Percentages: exact-match, per-bit match, constraint satisfaction."""

    coherent: float
    incoherent: float
    constraint: float

    def __post_init__(self):
        for v in (self.coherent, self.incoherent, self.constraint):
            if not 0.0 <= v <= 100.0:
                raise ValueError(f"metric {v} outside [0, 100]")


@dataclass(frozen=True)
class CanConfig:
    seed: int = 0
    epochs: int = 60
    batch_size: int = 64
    lr: float = 1e-3
    latent_dim: int = 16
    gen_hidden: tuple = (64,)
    disc_hidden: tuple = (64,)
    bootstrap: int = 10
    lambda_max: float = 1.0
    vocab: int | None = None
    code_dim: int = 0
    code_prior: tuple | None = None

    def __post_init__(self):
        if self.bootstrap < 0:
            raise ValueError("bootstrap must be >= 0")
        if self.lambda_max < 0:
            raise ValueError("lambda_max must be >= 0")
        if self.code_dim < 0:
            raise ValueError("code_dim must be >= 0")
        if self.code_prior is not None and len(self.code_prior) != self.code_dim:
            raise ValueError("code_prior length must equal code_dim")


@dataclass(frozen=True)
class Dataset:
    """Supervised examples with a fixed 60/20/20 index split."""

    task: str
    inputs: np.ndarray
    labels: np.ndarray
    meta: tuple
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray
    grid: GridSpec | None = None


def _split_indices(n: int, rng) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    idx = rng.permutation(n)
    n_train = int(n * 0.6)
    n_val = int(n * 0.2)
    return (idx[:n_train], idx[n_train:n_train + n_val], idx[n_train + n_val:])


# ---------------------------------------------------------------------------
# grid shortest-path data

def _components(g: GridSpec, present: np.ndarray) -> np.ndarray:
    """Component label per node in the subgraph of present edges."""
    comp = np.full(g.n_nodes, -1, dtype=np.int64)
    adj: list[list[int]] = [[] for _ in range(g.n_nodes)]
    for e, (u, v) in enumerate(g.edges()):
        if present[e]:
            adj[u].append(v)
            adj[v].append(u)
    label = 0
    for start in range(g.n_nodes):
        if comp[start] >= 0:
            continue
        stack = [start]
        comp[start] = label
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if comp[v] < 0:
                    comp[v] = label
                    stack.append(v)
        label += 1
    return comp


def shortest_path_label(
    g: GridSpec, present: np.ndarray, s: int, t: int
) -> np.ndarray | None:
    """Edge bits of the BFS-shortest s-t path in the subgraph, or None.

    Among minimum-length paths the lexicographically smallest edge-id
    sequence is chosen: walk from s, always taking the smallest-id edge
    that stays on a shortest path.
    """
    adj: list[list[tuple[int, int]]] = [[] for _ in range(g.n_nodes)]
    for e, (u, v) in enumerate(g.edges()):
        if present[e]:
            adj[u].append((e, v))
            adj[v].append((e, u))
    for lst in adj:
        lst.sort()
    dist = np.full(g.n_nodes, -1, dtype=np.int64)
    dist[t] = 0
    queue = [t]
    while queue:
        nxt = []
        for u in queue:
            for _e, v in adj[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        queue = nxt
    if dist[s] < 0:
        return None
    bits = np.zeros(g.n_edges, dtype=np.float64)
    u = s
    while u != t:
        for e, v in adj[u]:
            if dist[v] == dist[u] - 1:
                bits[e] = 1.0
                u = v
                break
    return bits


def gen_grid_dataset(g: GridSpec, n: int, seed: int) -> Dataset:
    """Shortest-path examples on random subgraphs of the grid.

    Each example removes a third of the edges, keeps only connected
    components with at least 5 nodes, and samples a solvable endpoint pair
    uniformly.  Input: node indicators for the endpoints followed by edge
    indicators for the surviving subgraph.  Label: the shortest-path edges.
    """
    rng = np.random.default_rng(seed)
    n_remove = g.n_edges // 3
    inputs = np.zeros((n, g.n_nodes + g.n_edges), dtype=np.float64)
    labels = np.zeros((n, g.n_edges), dtype=np.float64)
    meta = []
    made = 0
    attempts = 0
    while made < n:
        attempts += 1
        if attempts > 200 * n + 200:
            raise RuntimeError(
                "could not generate enough solvable examples; the grid may "
                "be too small for the 5-node component filter"
            )
        present = np.ones(g.n_edges, dtype=bool)
        if n_remove:
            present[rng.choice(g.n_edges, size=n_remove, replace=False)] = False
        comp = _components(g, present)
        sizes = np.bincount(comp)
        ok = sizes[comp] >= 5
        pairs = [
            (s, t)
            for s in range(g.n_nodes)
            for t in range(s + 1, g.n_nodes)
            if ok[s] and ok[t] and comp[s] == comp[t]
        ]
        if not pairs:
            continue
        s, t = pairs[rng.integers(len(pairs))]
        label = shortest_path_label(g, present, s, t)
        inputs[made, s] = 1.0
        inputs[made, t] = 1.0
        inputs[made, g.n_nodes:] = present
        labels[made] = label
        meta.append((s, t))
        made += 1
    tr, va, te = _split_indices(n, rng)
    return Dataset("grid", inputs, labels, tuple(meta), tr, va, te, grid=g)


def grid_path_formula(g: GridSpec, cap: int = PATH_CAP) -> Formula:
    """Label constraint for the grid task: the edges form SOME simple path."""
    parts = [
        simple_path(g, s, t, cap)
        for s in range(g.n_nodes)
        for t in range(s + 1, g.n_nodes)
    ]
    return or_(*parts)


# ---------------------------------------------------------------------------
# preference data

def gen_preference_dataset(n_items: int, n_users: int, seed: int) -> Dataset:
    """Synthetic ranking task from a one-factor utility model.

    Hidden utilities u_i = a_i * f + noise with per-user factor f.  The
    input is the observed ranking of the first ceil(n/2) items as a one-hot
    position matrix; the label ranks the remaining items the same way, in
    the total_order variable layout.
    """
    if n_items > 5:
        raise ValueError("n_items must be <= 5 (permutation circuit size)")
    if n_items < 2:
        raise ValueError("n_items must be >= 2")
    rng = np.random.default_rng(seed)
    k = (n_items + 1) // 2
    m = n_items - k
    loadings = rng.normal(size=n_items)
    inputs = np.zeros((n_users, k * k), dtype=np.float64)
    labels = np.zeros((n_users, m * m), dtype=np.float64)
    meta = []
    for u in range(n_users):
        f = rng.normal()
        util = loadings * f + 0.25 * rng.normal(size=n_items)
        obs_rank = np.argsort(-util[:k], kind="stable")
        for pos, item in enumerate(obs_rank):
            inputs[u, item * k + pos] = 1.0
        rem_rank = np.argsort(-util[k:], kind="stable")
        for pos, item in enumerate(rem_rank):
            labels[u, item * m + pos] = 1.0
        meta.append(tuple(util))
    tr, va, te = _split_indices(n_users, rng)
    return Dataset("pref", inputs, labels, tuple(meta), tr, va, te)


# ---------------------------------------------------------------------------
# metrics

def is_simple_path(g: GridSpec, s: int, t: int, edge_bits) -> bool:
    """Do the chosen edges form one simple s-t path in the full grid?"""
    chosen = [e for e in range(g.n_edges) if edge_bits[e]]
    if not chosen:
        return False
    adj: dict[int, list[tuple[int, int]]] = {}
    deg = np.zeros(g.n_nodes, dtype=np.int64)
    edges = g.edges()
    for e in chosen:
        u, v = edges[e]
        deg[u] += 1
        deg[v] += 1
        adj.setdefault(u, []).append((e, v))
        adj.setdefault(v, []).append((e, u))
    if deg[s] != 1 or deg[t] != 1:
        return False
    for u in range(g.n_nodes):
        if u not in (s, t) and deg[u] not in (0, 2):
            return False
    used = set()
    u = s
    while u != t:
        nxt = [(e, v) for e, v in adj.get(u, []) if e not in used]
        if len(nxt) != 1:
            return False
        e, u = nxt[0]
        used.add(e)
    return len(used) == len(chosen)


def satisfies_batch(circuit: Circuit, bits: np.ndarray) -> np.ndarray:
    """Row-wise exact satisfaction of 0/1 assignments.

    Runs the probability pass at the (clamped) hard bits: a satisfied row
    keeps mass >= (1-eps)^n > 0.5 while an unsatisfied one retains at most
    n*eps, so thresholding at 0.5 is exact discrimination.
    """
    w = batch_query(circuit, np.asarray(bits, dtype=np.float64), "wmc")
    return w > 0.5


def evaluate_metrics(model: Mlp, dataset: Dataset, circuit, indices=None) -> Metrics:
    """Threshold predictions at 0.5 and score them against the labels.

    constraint checks the decoded output against the example's own
    conditioned constraint: for the grid task, a valid simple path between
    that example's endpoints; otherwise satisfaction of the given circuit.
    """
    idx = np.arange(len(dataset.inputs)) if indices is None else indices
    probs = model.predict(dataset.inputs[idx])
    pred = probs > 0.5
    labels = dataset.labels[idx] > 0.5
    coherent = 100.0 * float(np.mean(np.all(pred == labels, axis=1)))
    incoherent = 100.0 * float(np.mean(pred == labels))
    if dataset.task == "grid":
        hits = [
            is_simple_path(dataset.grid, *dataset.meta[i], row)
            for i, row in zip(idx, pred)
        ]
        constraint = 100.0 * float(np.mean(hits))
    else:
        cond = _cond_dim(circuit, dataset)
        bits = (
            np.concatenate([dataset.inputs[idx, :cond], pred], axis=1)
            if cond
            else pred
        )
        constraint = 100.0 * float(np.mean(satisfies_batch(circuit, bits)))
    return Metrics(coherent, incoherent, constraint)


# ---------------------------------------------------------------------------
# supervised training

@dataclass
class TrainResult:
    model: Mlp
    history: list


def _cond_dim(circuit, dataset: Dataset) -> int:
    """How many leading circuit variables are clamped from the inputs.

    The circuit may cover extra conditioning variables ahead of the label
    variables (for the grid task: the endpoint indicators of
    simple_path_full).  Their probabilities are taken verbatim from the
    first input columns, which must be 0/1.
    """
    d_out = dataset.labels.shape[1]
    cond = circuit.var_count - d_out
    if cond < 0 or cond > dataset.inputs.shape[1]:
        raise ValueError(
            f"circuit covers {circuit.var_count} variables but labels have "
            f"{d_out} and inputs only {dataset.inputs.shape[1]} columns"
        )
    if cond and not np.isin(dataset.inputs[:, :cond], (0.0, 1.0)).all():
        raise ValueError("conditioning input columns must be 0/1 valued")
    return cond


def _loss_terms(circuit, cond_bits, probs, cfg: TrainConfig):
    """Semantic-loss / entropy values and their gradient w.r.t. probs.

    cond_bits are clamped conditioning variables prepended to the
    probability rows; their gradient entries are discarded.
    """
    n_rows = probs.shape[0]
    sl = np.zeros(n_rows)
    ent = np.zeros(n_rows)
    grad = np.zeros_like(probs)
    cond = cond_bits.shape[1]
    w_nesy = cfg.lambda_ent if cfg.entropy == "nesy" else 0.0
    if cfg.lambda_sl > 0 or w_nesy > 0:
        ext = np.concatenate([cond_bits, probs], axis=1) if cond else probs
        sl, ent, gext = batch_training_losses(circuit, ext, cfg.lambda_sl, w_nesy)
        grad = gext[:, cond:]
        if cfg.entropy != "nesy":
            ent = np.zeros(n_rows)
    if cfg.entropy == "full" and cfg.lambda_ent > 0:
        pc = clamp_probs(probs)
        ent = -(pc * np.log(pc) + (1 - pc) * np.log1p(-pc)).sum(axis=1)
        grad = grad + cfg.lambda_ent * np.log((1 - pc) / pc)
    return sl, ent, grad


def train_supervised(cfg: TrainConfig, dataset: Dataset, circuit) -> TrainResult:
    """Minimize XE + lambda_sl*SL + lambda_ent*entropy on the train split."""
    d_in = dataset.inputs.shape[1]
    cond = _cond_dim(circuit, dataset)
    rng = np.random.default_rng(cfg.seed)
    model = Mlp([d_in, *cfg.hidden, dataset.labels.shape[1]], rng)
    opt = Adam(model, cfg.lr)
    tr = dataset.train_idx
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(tr))
        tot_xe = tot_sl = tot_ent = 0.0
        seen = 0
        for lo in range(0, len(tr), cfg.batch_size):
            b = tr[order[lo:lo + cfg.batch_size]]
            x, y = dataset.inputs[b], dataset.labels[b]
            probs, cache = model.forward(x)
            n_rows = len(b)
            pc = clamp_probs(probs)
            xe = -(y * np.log(pc) + (1 - y) * np.log1p(-pc)).sum() / n_rows
            dlogits = (probs - y) / n_rows
            sl, ent, gprobs = _loss_terms(circuit, x[:, :cond], probs, cfg)
            grads, _ = model.backward(
                cache, dprobs=gprobs / n_rows, dlogits=dlogits
            )
            opt.step(model, grads)
            tot_xe += xe * n_rows
            tot_sl += float(sl.sum())
            tot_ent += float(ent.sum())
            seen += n_rows
        history.append({
            "epoch": epoch,
            "xe": tot_xe / seen,
            "sl": tot_sl / seen,
            "entropy": tot_ent / seen,
            "train": evaluate_metrics(model, dataset, circuit, dataset.train_idx),
            "val": evaluate_metrics(model, dataset, circuit, dataset.val_idx),
        })
    return TrainResult(model, history)


# ---------------------------------------------------------------------------
# uniform structure sampling

def _node_model_counts(c: Circuit) -> list[int]:
    vals: list[int] = []
    for node in c.nodes:
        kind = node[0]
        if kind in (LIT, CTRUE):
            vals.append(1)
        elif kind == CFALSE:
            vals.append(0)
        elif kind == AND:
            v = 1
            for ch in node[1]:
                v *= vals[ch]
            vals.append(v)
        else:
            vals.append(sum(vals[ch] for ch in node[2]))
    return vals


def uniform_models(c: Circuit, n: int, seed: int) -> np.ndarray:
    """n assignments drawn uniformly from the circuit's model set.

    Top-down descent: AND expands all children, OR picks a child with
    probability proportional to its model count (children are disjoint),
    free variables get fair coin flips.
    """
    verify_query_structure(c)
    counts = _node_model_counts(c)
    if counts[c.root] == 0:
        raise ValueError("cannot sample from an empty model set")
    rng = np.random.default_rng(seed)
    root_scope = c.scopes[c.root]
    free = [v for v in range(c.var_count) if not (root_scope >> v) & 1]
    out = np.zeros((n, c.var_count), dtype=np.uint8)
    for k in range(n):
        stack = [c.root]
        while stack:
            i = stack.pop()
            node = c.nodes[i]
            kind = node[0]
            if kind == LIT:
                out[k, node[1]] = 1 if node[2] else 0
            elif kind == AND:
                stack.extend(reversed(node[1]))
            elif kind == OR:
                r = int(rng.integers(counts[i]))
                for ch in node[2]:
                    if r < counts[ch]:
                        stack.append(ch)
                        break
                    r -= counts[ch]
        for v in free:
            out[k, v] = rng.integers(2)
    return out


# ---------------------------------------------------------------------------
# constrained GAN

@dataclass
class CanResult:
    gen: Mlp
    disc: Mlp
    history: list


def lambda_schedule(cfg: CanConfig, epoch: int) -> float:
    """Zero through the bootstrap phase, then a linear ramp to lambda_max."""
    if epoch < cfg.bootstrap or cfg.lambda_max == 0.0:
        return 0.0
    span = cfg.epochs - cfg.bootstrap
    if span <= 0:
        return cfg.lambda_max
    return cfg.lambda_max * (epoch - cfg.bootstrap + 1) / span


def _draw_codes(cfg: CanConfig, rng, n: int) -> np.ndarray:
    prior = (
        np.full(cfg.code_dim, 0.5)
        if cfg.code_prior is None
        else np.asarray(cfg.code_prior, dtype=np.float64)
    )
    return (rng.uniform(size=(n, cfg.code_dim)) < prior).astype(np.float64)


def train_can(cfg: CanConfig, dataset: np.ndarray, circuit) -> CanResult:
    """Alternating GAN updates; the generator loss adds lambda(t) * SL.

    dataset: (N, d) rows of valid structures.  The semantic loss is the
    negative log of the batch-mean circuit mass at the generator's output
    probabilities.  With code_dim > 0 the circuit is expected to append one
    code variable per switchable part; codes are drawn from the prior and
    clamped into the probability vector.
    """
    data = np.asarray(dataset, dtype=np.float64)
    content_dim = circuit.var_count - cfg.code_dim
    if data.ndim != 2 or data.shape[1] != content_dim:
        raise ValueError(
            f"expected dataset shape (N, {content_dim}), got {data.shape}"
        )
    rng = np.random.default_rng(cfg.seed)
    gen = Mlp([cfg.latent_dim + cfg.code_dim, *cfg.gen_hidden, content_dim], rng)
    disc = Mlp([content_dim, *cfg.disc_hidden, 1], rng)
    g_opt = Adam(gen, cfg.lr)
    d_opt = Adam(disc, cfg.lr)
    n_batches = max(1, len(data) // cfg.batch_size)
    history = []
    for epoch in range(cfg.epochs):
        lam = lambda_schedule(cfg, epoch)
        d_sum = g_sum = sl_sum = 0.0
        for _ in range(n_batches):
            bsz = cfg.batch_size

            # discriminator: real rows up, sampled structures down
            real = data[rng.integers(len(data), size=bsz)]
            z = rng.standard_normal((bsz, cfg.latent_dim))
            g_in = (
                np.concatenate([z, _draw_codes(cfg, rng, bsz)], axis=1)
                if cfg.code_dim
                else z
            )
            theta = gen.predict(g_in)
            fake = (rng.uniform(size=theta.shape) < theta).astype(np.float64)
            p_real, cache_r = disc.forward(real)
            p_fake, cache_f = disc.forward(fake)
            pr = clamp_probs(p_real)
            pf = clamp_probs(p_fake)
            d_loss = float(-np.log(pr).mean() - np.log1p(-pf).mean())
            gr, _ = disc.backward(cache_r, dlogits=(p_real - 1.0) / bsz)
            gf, _ = disc.backward(cache_f, dlogits=p_fake / bsz)
            d_grads = [(a[0] + b[0], a[1] + b[1]) for a, b in zip(gr, gf)]
            d_opt.step(disc, d_grads)

            # generator: non-saturating loss through soft outputs, plus SL
            z = rng.standard_normal((bsz, cfg.latent_dim))
            codes = _draw_codes(cfg, rng, bsz) if cfg.code_dim else None
            g_in = np.concatenate([z, codes], axis=1) if cfg.code_dim else z
            theta, g_cache = gen.forward(g_in)
            p_d, d_cache = disc.forward(theta)
            g_loss = float(-np.log(clamp_probs(p_d)).mean())
            _, dtheta = disc.backward(d_cache, dlogits=(p_d - 1.0) / bsz)
            sl_val = 0.0
            if lam > 0.0:
                full = (
                    np.concatenate([theta, codes], axis=1)
                    if cfg.code_dim
                    else theta
                )
                w, gw = batch_query(circuit, full, "wmc", with_grad=True)
                mean_w = float(w.mean())
                sl_val = -math.log(mean_w)
                dtheta = dtheta - lam * gw[:, :content_dim] / (mean_w * bsz)
            g_grads, _ = gen.backward(g_cache, dprobs=dtheta)
            g_opt.step(gen, g_grads)
            d_sum += d_loss
            g_sum += g_loss
            sl_sum += sl_val
        score = sample_and_score(
            gen, 128, cfg.seed * 100003 + epoch, circuit,
            vocab=cfg.vocab, code_dim=cfg.code_dim, code_prior=cfg.code_prior,
        )
        history.append({
            "epoch": epoch,
            "lambda": lam,
            "d_loss": d_sum / n_batches,
            "g_loss": g_sum / n_batches,
            "sl": sl_sum / n_batches,
            "validity": score["validity"],
            "diversity": score["diversity"],
            "pipe_tiles": score["pipe_tiles"],
        })
    return CanResult(gen, disc, history)


def sample_and_score(
    gen: Mlp, n: int, seed: int, circuit,
    vocab: int | None = None, code_dim: int = 0, code_prior=None,
) -> dict:
    """Draw n structures from the generator and score them.

    Per-variable Bernoulli draws from theta(z); for tile tasks each cell is
    then decoded by argmax (drawn bits dominate, fresh uniforms break
    ties).  validity is the percentage satisfying the circuit; diversity is
    the mean pairwise L1 distance per variable; pipe_tiles is the mean
    count of non-background tiles (tile id 0 is background).
    """
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, gen.widths[0] - code_dim))
    if code_dim:
        prior = (
            np.full(code_dim, 0.5)
            if code_prior is None
            else np.asarray(code_prior, dtype=np.float64)
        )
        codes = (rng.uniform(size=(n, code_dim)) < prior).astype(np.float64)
        theta = gen.predict(np.concatenate([z, codes], axis=1))
    else:
        codes = None
        theta = gen.predict(z)
    draws = rng.uniform(size=theta.shape) < theta
    if vocab is not None:
        cells = theta.shape[1] // vocab
        if cells * vocab != theta.shape[1]:
            raise ValueError("output width is not a multiple of vocab")
        score = draws.astype(np.float64) + rng.uniform(size=theta.shape)
        pick = score.reshape(n, cells, vocab).argmax(axis=2)
        decoded = np.zeros_like(theta)
        rows = np.repeat(np.arange(n), cells)
        cols = (np.arange(cells) * vocab)[None, :] + pick
        decoded[rows, cols.ravel()] = 1.0
        pipe_tiles = float((pick != 0).sum(axis=1).mean())
    else:
        decoded = draws.astype(np.float64)
        pipe_tiles = None
    full = np.concatenate([decoded, codes], axis=1) if code_dim else decoded
    ok = satisfies_batch(circuit, full)
    validity = 100.0 * float(ok.mean())
    d = decoded.shape[1]
    ones = decoded.sum(axis=0)
    pair_sum = float((ones * (n - ones)).sum())
    diversity = pair_sum / (n * (n - 1) / 2) / d if n > 1 else 0.0
    return {
        "validity": validity,
        "diversity": diversity,
        "pipe_tiles": pipe_tiles,
        "samples": full.astype(np.uint8),
    }
