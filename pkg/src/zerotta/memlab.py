"""Desk-scale lab for marginal-entropy minimization over a toy encoder.

The frozen transformer text encoder is replaced by a normalized linear map,
which keeps the structure under study (class embeddings differentiable in a
shared trainable context) while allowing exact hand-derived gradients.  One
gradient-descent step is applied and the stability of the marginal
prediction under that step is measured.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import entropy, softmax_temperature
from .zero import FilterConfig, confidence_filter


@dataclass(frozen=True)
class ToyDims:
    """Problem sizes for one synthetic instance."""

    n_views: int
    n_classes: int
    embed_dim: int
    ctx_dim: int
    ctx_len: int
    token_dim: int

    def __post_init__(self):
        if self.n_views < 1 or self.n_classes < 2:
            raise ValueError("need n_views >= 1 and n_classes >= 2")
        if self.embed_dim < self.ctx_len * self.ctx_dim + self.token_dim:
            raise ValueError(
                "embed_dim must be at least ctx_len*ctx_dim + token_dim "
                "for the projection to have full column rank"
            )

    @property
    def ctx_cols(self) -> int:
        return self.ctx_len * self.ctx_dim


@dataclass(frozen=True)
class ToyEncoder:
    """Normalized linear text encoder.

    Class c embeds as normalize(W @ concat(ctx.ravel(), class_tokens[c])),
    with the projection W shared across classes and required to have full
    column rank so no direction of the input is silently dropped.
    """

    projection: np.ndarray   # (embed_dim, ctx_cols + token_dim)
    class_tokens: np.ndarray  # (n_classes, token_dim)

    def __post_init__(self):
        d, p = self.projection.shape
        if np.linalg.matrix_rank(self.projection) < p:
            raise ValueError("projection is column-rank deficient")
        if self.class_tokens.ndim != 2:
            raise ValueError("class_tokens must be 2-D")

    @property
    def token_dim(self) -> int:
        return self.class_tokens.shape[1]

    @property
    def ctx_cols(self) -> int:
        return self.projection.shape[1] - self.token_dim


@dataclass(frozen=True)
class MemConfig:
    """One-step optimization settings.

    ``learning_rate`` may be zero for degenerate diagnostics (the update is
    then the identity).
    """

    learning_rate: float = 0.01
    tau: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.learning_rate < 0.0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if not self.tau > 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")


@dataclass(frozen=True)
class InvarianceRecord:
    """Outcome of one trial: marginal prediction before/after the update."""

    argmax_pre: int
    argmax_post: int
    entropy_pre: float
    entropy_post: float
    condition_lhs: float         # pre-update marginal mass on the predicted class
    condition_rhs: float         # mean per-view probability decrease of that class
    condition_rhs_scaled: float  # the same threshold scaled by the learning rate
    condition_holds: bool
    invariant: bool


@dataclass(frozen=True)
class InvarianceSweep:
    records: tuple[InvarianceRecord, ...]
    bin_ratios: np.ndarray
    bin_counts: np.ndarray

    @property
    def invariance_ratio(self) -> float:
        return float(np.mean([r.invariant for r in self.records]))


def random_instance(seed, dims: ToyDims):
    """Draw (image_embs, encoder, ctx) from a single master seed.

    Image embeddings are isotropic on the unit sphere; the projection and
    class tokens are unit normal, with the projection redrawn on the
    (measure-zero) event of a rank-deficient sample.
    """
    ss = np.random.SeedSequence(list(np.atleast_1d(seed)))
    s_img, s_proj, s_tok, s_ctx = ss.spawn(4)

    rng = np.random.default_rng(s_img)
    image_embs = rng.normal(size=(dims.n_views, dims.embed_dim))
    image_embs /= np.linalg.norm(image_embs, axis=1, keepdims=True)

    rng = np.random.default_rng(s_proj)
    p = dims.ctx_cols + dims.token_dim
    projection = rng.normal(size=(dims.embed_dim, p))
    while np.linalg.matrix_rank(projection) < p:
        projection = rng.normal(size=(dims.embed_dim, p))

    class_tokens = np.random.default_rng(s_tok).normal(size=(dims.n_classes, dims.token_dim))
    ctx = np.random.default_rng(s_ctx).normal(size=(dims.ctx_len, dims.ctx_dim))
    return image_embs, ToyEncoder(projection=projection, class_tokens=class_tokens), ctx


def toy_text_embeddings(enc: ToyEncoder, ctx: np.ndarray) -> np.ndarray:
    """Unit-norm class embeddings as a function of the shared context."""
    q = enc.ctx_cols
    flat = np.asarray(ctx, dtype=np.float64).ravel()
    if flat.size != q:
        raise ValueError(f"ctx has {flat.size} entries, encoder expects {q}")
    raw = enc.projection[:, :q] @ flat + enc.class_tokens @ enc.projection[:, q:].T
    norms = np.linalg.norm(raw, axis=1)
    if np.any(norms < 1e-9):
        idx = int(np.argmax(norms < 1e-9))
        raise ValueError(f"class {idx} embedding has near-zero norm before normalization")
    return raw / norms[:, None]


def confidence_mask(image_embs: np.ndarray, enc: ToyEncoder, ctx: np.ndarray,
                    cfg: MemConfig) -> np.ndarray:
    """Boolean view mask from entropy filtering at the given context."""
    probs = _view_probs(image_embs, enc, ctx, cfg.tau)
    return confidence_filter(probs, FilterConfig(gamma=cfg.gamma, tau=cfg.tau)).kept


def _view_probs(image_embs, enc, ctx, tau):
    logits = np.asarray(image_embs, dtype=np.float64) @ toy_text_embeddings(enc, ctx).T
    return softmax_temperature(logits, tau)


def mem_loss(image_embs: np.ndarray, enc: ToyEncoder, ctx: np.ndarray,
             cfg: MemConfig, mask: np.ndarray | None = None) -> float:
    """Entropy of the filtered marginal distribution.

    The filter mask is frozen before differentiation: pass the mask computed
    at the reference context when evaluating perturbed contexts, otherwise
    it is recomputed here.
    """
    if mask is None:
        mask = confidence_mask(image_embs, enc, ctx, cfg)
    probs = _view_probs(image_embs, enc, ctx, cfg.tau)
    return float(entropy(probs[mask].mean(axis=0)))


def mem_gradient(image_embs: np.ndarray, enc: ToyEncoder, ctx: np.ndarray,
                 cfg: MemConfig, mask: np.ndarray | None = None) -> np.ndarray:
    """Analytic gradient of :func:`mem_loss` with respect to the context.

    Chain rule through the marginal entropy, the per-view temperature
    softmax, the cosine logits, the per-class normalization, and the shared
    linear projection.
    """
    imgs = np.asarray(image_embs, dtype=np.float64)
    ctx = np.asarray(ctx, dtype=np.float64)
    if mask is None:
        mask = confidence_mask(imgs, enc, ctx, cfg)

    q = enc.ctx_cols
    flat = ctx.ravel()
    raw = enc.projection[:, :q] @ flat + enc.class_tokens @ enc.projection[:, q:].T
    norms = np.linalg.norm(raw, axis=1)
    z_txt = raw / norms[:, None]

    kept = imgs[mask]
    k = kept.shape[0]
    logits = kept @ z_txt.T
    probs = softmax_temperature(logits, cfg.tau)
    pbar = probs.mean(axis=0)

    # dH/dpbar, with zero-probability classes contributing nothing (their
    # per-view probabilities are all exactly zero as well).
    coeff = np.where(pbar > 0.0, -(np.log(np.where(pbar > 0.0, pbar, 1.0)) + 1.0), 0.0)
    # dH/dlogits through the softmax Jacobian and the 1/k marginal average.
    inner = probs @ coeff
    dlogits = probs * (coeff[None, :] - inner[:, None]) / (k * cfg.tau)

    # dH/dz_txt, then back through the normalization and the projection.
    dz = dlogits.T @ kept
    du = (dz - (np.sum(dz * z_txt, axis=1, keepdims=True)) * z_txt) / norms[:, None]
    dflat = enc.projection[:, :q].T @ du.sum(axis=0)
    return dflat.reshape(ctx.shape)


def mem_step(ctx: np.ndarray, gradient: np.ndarray, learning_rate: float) -> np.ndarray:
    """Single gradient-descent update of the context."""
    ctx = np.asarray(ctx, dtype=np.float64)
    grad = np.asarray(gradient, dtype=np.float64)
    if ctx.shape != grad.shape:
        raise ValueError(f"shape mismatch: ctx {ctx.shape} vs gradient {grad.shape}")
    return ctx - learning_rate * grad


def prob_decrease(class_index: int, image_emb: np.ndarray, enc: ToyEncoder,
                  ctx_pre: np.ndarray, ctx_post: np.ndarray, tau: float) -> float:
    """Drop in the probability assigned to one class caused by a context update.

    Positive when the update moved mass away from the class; evaluated by
    direct re-evaluation of the softmax at both contexts.
    """
    img = np.asarray(image_emb, dtype=np.float64)
    p_pre = softmax_temperature(img @ toy_text_embeddings(enc, ctx_pre).T, tau)
    p_post = softmax_temperature(img @ toy_text_embeddings(enc, ctx_post).T, tau)
    return float(p_pre[class_index] - p_post[class_index])


def invariance_trial(seed, dims: ToyDims, cfg: MemConfig) -> InvarianceRecord:
    """One sampled instance, one update, and the resulting invariance record."""
    imgs, enc, ctx = random_instance(seed, dims)
    mask = confidence_mask(imgs, enc, ctx, cfg)

    probs_pre = _view_probs(imgs, enc, ctx, cfg.tau)
    p_pre = probs_pre[mask].mean(axis=0)
    c_hat = int(p_pre.argmax())

    grad = mem_gradient(imgs, enc, ctx, cfg, mask=mask)
    ctx_post = mem_step(ctx, grad, cfg.learning_rate)

    probs_post = _view_probs(imgs, enc, ctx_post, cfg.tau)
    p_post = probs_post[mask].mean(axis=0)

    rhs = float(np.mean(probs_pre[mask, c_hat] - probs_post[mask, c_hat]))
    return InvarianceRecord(
        argmax_pre=c_hat,
        argmax_post=int(p_post.argmax()),
        entropy_pre=float(entropy(p_pre)),
        entropy_post=float(entropy(p_post)),
        condition_lhs=float(p_pre[c_hat]),
        condition_rhs=rhs,
        condition_rhs_scaled=cfg.learning_rate * rhs,
        condition_holds=bool(p_pre[c_hat] > rhs),
        invariant=bool(p_pre.argmax() == p_post.argmax()),
    )


def invariance_sweep(trials: int, dims: ToyDims, cfg: MemConfig,
                     n_entropy_bins: int = 10, seed: int = 0) -> InvarianceSweep:
    """Run many trials and bucket invariance ratios by pre-update entropy.

    Records are sorted by descending pre-update marginal entropy and split
    into near-equal buckets: bucket 0 holds the most uncertain trials.
    """
    if trials < n_entropy_bins:
        raise ValueError("need at least one trial per entropy bin")
    records = tuple(invariance_trial([seed, t], dims, cfg) for t in range(trials))

    order = np.argsort([-r.entropy_pre for r in records], kind="stable")
    flags = np.array([records[i].invariant for i in order], dtype=np.float64)
    chunks = np.array_split(flags, n_entropy_bins)
    return InvarianceSweep(
        records=records,
        bin_ratios=np.array([c.mean() for c in chunks]),
        bin_counts=np.array([len(c) for c in chunks], dtype=np.int64),
    )
