"""Synthetic domain generator, proxy detector, baseline samplers, benchmark.

The generator emits Gaussian-mixture frames: each cluster owns a scene-level
offset and an orthonormal ROI direction; the target domain shifts the scene
center by ``domain_shift`` and drags every ROI direction toward its
neighbouring cluster. The proxy detector is a multinomial logistic regression
on re-weighted ROI vectors whose held-out accuracy stands in for detection AP
at desk scale.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import BudgetSchedule, Domain, FrameRecord
from .discriminator import TrainConfig
from .pipeline import PipelineConfig, run_bidomain
from .scoring import entropy_map
from .source_sampler import Threshold
from .target_sampler import cosine, reweight


@dataclass(frozen=True)
class SyntheticConfig:
    n_source: int = 400
    n_target: int = 400
    n_eval: int = 300
    clusters_per_domain: int = 3
    feature_dims: Tuple[int, int, int, int, int] = (16, 4, 4, 2, 16)  # C,H,W,C',d_roi
    domain_shift: float = 3.0
    label_noise: float = 0.0
    cluster_skew: float = 0.6
    roi_noise: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if min(self.n_source, self.n_target, self.n_eval) < 1:
            raise ValueError("dataset sizes must be positive")
        if self.clusters_per_domain < 1:
            raise ValueError("clusters_per_domain must be positive")
        if any(d < 1 for d in self.feature_dims):
            raise ValueError("feature dims must be positive")
        if self.domain_shift < 0:
            raise ValueError("domain_shift must be non-negative")
        if not 0.0 <= self.label_noise < 0.5:
            raise ValueError("label_noise must lie in [0, 0.5)")
        if not 0.0 < self.cluster_skew <= 1.0:
            raise ValueError("cluster_skew must lie in (0, 1]")
        if self.roi_noise < 0:
            raise ValueError("roi_noise must be non-negative")


CLUSTER_SCENE_SCALE = 1.0
SCENE_NOISE = 1.0
FEATURE_NOISE = 0.25


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def generate(
    cfg: SyntheticConfig,
) -> Tuple[List[FrameRecord], List[FrameRecord], List[FrameRecord]]:
    """Seeded (source, target, eval) frame lists; eval is cluster-balanced."""
    rng = np.random.default_rng(cfg.seed)
    C, H, W, Cp, d = cfg.feature_dims
    K = cfg.clusters_per_domain

    scene_offsets = CLUSTER_SCENE_SCALE * rng.normal(size=(K, C))
    shift_dir = _unit(rng.normal(size=C))
    target_center = cfg.domain_shift * shift_dir

    # orthonormal cluster directions (QR of a random matrix) keep the
    # cross-cluster geometry identical across seeds
    q_mat, _ = np.linalg.qr(rng.normal(size=(d, min(K, d))))
    roi_dirs_s = np.stack([q_mat[:, k % d] for k in range(K)])
    # the target domain drags each cluster toward its neighbour, so a
    # source-only classifier genuinely confuses adjacent target clusters
    morph = min(0.9, cfg.domain_shift / 4.0)
    roi_dirs_t = np.stack(
        [
            _unit((1.0 - morph) * roi_dirs_s[k] + morph * roi_dirs_s[(k + 1) % K])
            if K > 1
            else roi_dirs_s[k]
            for k in range(K)
        ]
    )
    skew = cfg.cluster_skew ** np.arange(K)
    target_probs = skew / skew.sum()

    def make_frame(
        fid: str, domain: Domain, cluster: int, noisy_label: bool, lam: float
    ) -> FrameRecord:
        # lam interpolates a frame's position between the source manifold
        # (0) and the target manifold (1); target frames sit at 1, source
        # frames spread over [0, 1] to model intra-domain variation. Scene
        # centers of source frames reach only halfway so the two domains
        # stay separable for the discriminator.
        scene_lam = lam if domain == Domain.TARGET else 0.5 * lam
        center = scene_lam * target_center
        scene = center + scene_offsets[cluster] + SCENE_NOISE * rng.normal(size=C)
        fmap = scene[:, None, None] + FEATURE_NOISE * rng.normal(size=(C, H, W))
        density = rng.uniform(0.2, 0.8)
        obj = np.clip(
            density + 0.1 * rng.normal(size=(Cp, H, W)), 1e-4, 1.0 - 1e-4
        )
        k_roi = int(rng.integers(1, 6))
        mix = (1.0 - lam) * roi_dirs_s[cluster] + lam * roi_dirs_t[cluster]
        base = _unit(mix)
        # a minority of frames are hard (blurry / occluded): their ROI
        # features carry several times the usual noise
        noise_scale = cfg.roi_noise * (4.0 if rng.random() < 0.10 else 1.0)
        rois = base[None, :] + (noise_scale / np.sqrt(d)) * rng.normal(
            size=(k_roi, d)
        )
        rois = rois / np.linalg.norm(rois, axis=1, keepdims=True)
        confs = rng.uniform(0.3, 1.0, size=k_roi)
        label = cluster
        if noisy_label and cfg.label_noise > 0 and rng.random() < cfg.label_noise:
            label = int((cluster + 1 + rng.integers(0, K - 1)) % K) if K > 1 else cluster
        return FrameRecord(
            id=fid,
            domain=domain,
            feature_map=fmap.astype(np.float32),
            objectness_map=obj.astype(np.float32),
            roi_features=rois.astype(np.float32),
            roi_confidences=confs.astype(np.float32),
            hidden_label=label,
        )

    source = [
        make_frame(
            "s%05d" % i,
            Domain.SOURCE,
            int(rng.integers(0, K)),
            True,
            float(rng.uniform(0.0, 1.0)),
        )
        for i in range(cfg.n_source)
    ]
    target = [
        make_frame(
            "t%05d" % j, Domain.TARGET, int(rng.choice(K, p=target_probs)), True, 1.0
        )
        for j in range(cfg.n_target)
    ]
    eval_frames = [
        make_frame("e%05d" % j, Domain.TARGET, j % K, False, 1.0)
        for j in range(cfg.n_eval)
    ]
    return source, target, eval_frames


class ProxyDetector:
    """Regularized softmax regression on re-weighted ROI vectors."""

    def __init__(
        self,
        n_classes,
        roi_dim,
        lr=0.2,
        pretrain_epochs=100,
        l2=1e-3,
        target_weight=3.0,
    ):
        self.n_classes = int(n_classes)
        self.roi_dim = int(roi_dim)
        self.lr = float(lr)
        self.pretrain_epochs = int(pretrain_epochs)
        self.l2 = float(l2)
        # labeled target frames are scarce; upweighting them mimics the
        # emphasis a detector fine-tune would give freshly annotated data
        self.target_weight = float(target_weight)

    def _design(self, labeled):
        X = np.stack([reweight(f, roi_dim=self.roi_dim).vector for f, _ in labeled])
        y = np.array([int(lab) for _, lab in labeled])
        w = np.array(
            [
                self.target_weight if f.domain == Domain.TARGET else 1.0
                for f, _ in labeled
            ]
        )
        # class-balanced weighting keeps skewed label batches from tilting
        # the class priors
        counts = np.bincount(y, minlength=self.n_classes).astype(float)
        w = w / counts[y]
        return X, y, w / w.mean()

    def pretrain(self, frames: Sequence[FrameRecord]):
        state = {
            "W": np.zeros((self.roi_dim, self.n_classes)),
            "b": np.zeros(self.n_classes),
        }
        labeled = [(f, f.hidden_label) for f in frames]
        return self.finetune(state, labeled, self.pretrain_epochs)

    def finetune(self, state, labeled, epochs: int):
        W = state["W"].copy()
        b = state["b"].copy()
        if not labeled or epochs == 0:
            return {"W": W, "b": b}
        X, y, w = self._design(labeled)
        Y = np.eye(self.n_classes)[y]
        n = X.shape[0]
        for _ in range(epochs):
            P = _softmax(X @ W + b)
            err = w[:, None] * (P - Y) / n
            W -= self.lr * (X.T @ err + self.l2 * W)
            b -= self.lr * err.sum(axis=0)
        return {"W": W, "b": b}

    def logits(self, state, frames: Sequence[FrameRecord]) -> np.ndarray:
        X = np.stack([reweight(f, roi_dim=self.roi_dim).vector for f in frames])
        return X @ state["W"] + state["b"]

    def evaluate(self, state, frames: Sequence[FrameRecord]) -> float:
        preds = np.argmax(self.logits(state, frames), axis=1)
        truth = np.array([int(f.hidden_label) for f in frames])
        return float(np.mean(preds == truth))

    def features(self, state, frame: FrameRecord) -> FrameRecord:
        return frame


def _softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def sample_random(
    unlabeled: Sequence[FrameRecord], budget: int, seed: int
) -> List[str]:
    """Uniform without replacement over ascending ids, deterministic per seed."""
    ids = sorted(f.id for f in unlabeled)
    if budget <= 0:
        return []
    if budget >= len(ids):
        return ids
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(ids), size=budget, replace=False)
    return [ids[i] for i in picks]


def frame_entropy(frame: FrameRecord) -> float:
    """Mean binary entropy of ROI confidences (0 when there are none)."""
    confs = np.asarray(frame.roi_confidences, dtype=np.float64)
    if confs.size == 0:
        return 0.0
    return float(np.mean(entropy_map(confs)))


def sample_entropy(unlabeled: Sequence[FrameRecord], budget: int) -> List[str]:
    """Top-budget frames by mean confidence entropy, descending, id tie-break."""
    ranked = sorted(unlabeled, key=lambda f: (-frame_entropy(f), f.id))
    return [f.id for f in ranked[: max(budget, 0)]]


def sample_committee(
    unlabeled: Sequence[FrameRecord],
    labeled_X: np.ndarray,
    labeled_y: np.ndarray,
    n_classes: int,
    budget: int,
    seed: int,
    n_heads: int = 2,
    epochs: int = 100,
    lr: float = 0.2,
) -> List[str]:
    """Disagreement sampling: heads with different inits, ranked by logit distance."""
    if budget <= 0:
        return []
    roi_dim = labeled_X.shape[1]
    rngs = [np.random.default_rng(seed + h) for h in range(n_heads)]
    heads = []
    Y = np.eye(n_classes)[np.asarray(labeled_y, dtype=int)]
    n = labeled_X.shape[0]
    for rng in rngs:
        W = 0.1 * rng.normal(size=(roi_dim, n_classes))
        b = np.zeros(n_classes)
        for _ in range(epochs):
            P = _softmax(labeled_X @ W + b)
            err = (P - Y) / n
            W -= lr * labeled_X.T @ err
            b -= lr * err.sum(axis=0)
        heads.append((W, b))
    X = np.stack(
        [reweight(f, roi_dim=roi_dim).vector for f in unlabeled]
    )
    logits = [X @ W + b for W, b in heads]
    dist = np.zeros(X.shape[0])
    for i in range(len(heads)):
        for j in range(i + 1, len(heads)):
            dist += np.linalg.norm(logits[i] - logits[j], axis=1)
    order = sorted(range(len(unlabeled)), key=lambda i: (-dist[i], unlabeled[i].id))
    return [unlabeled[i].id for i in order[:budget]]


STRATEGIES = ("random", "entropy", "committee", "bidomain")


def default_schedule(budget: int, frac: float) -> BudgetSchedule:
    """Two rounds for small budgets, five otherwise, at fixed trigger epochs."""
    rounds = 2 if (frac <= 0.02 or budget < 5) else 5
    rounds = min(rounds, budget)
    return BudgetSchedule.equal_split(budget, rounds, _default_epochs(rounds))


def _default_epochs(rounds: int) -> Tuple[int, ...]:
    presets = {1: (0,), 2: (0, 5), 5: (0, 2, 4, 6, 8)}
    return presets.get(rounds, tuple(2 * i for i in range(rounds)))


def run_strategy(
    strategy: str,
    source: Sequence[FrameRecord],
    target: Sequence[FrameRecord],
    eval_frames: Sequence[FrameRecord],
    schedule: BudgetSchedule,
    seed: int,
    n_classes: int,
    roi_dim: int,
    disc_epochs: int = 150,
    round_epochs: int = 25,
) -> Dict[str, Any]:
    """One full pipeline run for one strategy; returns accuracy and selections."""
    oracle = ProxyDetector(n_classes=n_classes, roi_dim=roi_dim)
    if strategy == "bidomain":
        cfg = PipelineConfig(
            schedule=schedule,
            source_mode=Threshold(0.0),
            source_finetune_epochs=15,
            discriminator=TrainConfig(epochs=disc_epochs, seed=seed),
            seed=seed,
            round_finetune_epochs=round_epochs,
        )
        _, state, report = run_bidomain(source, target, oracle, cfg, eval_frames)
        return {
            "accuracy": report["final_metric"],
            "selected": list(state.labeled_target),
            "report": report,
        }
    if strategy not in STRATEGIES:
        raise ValueError("unknown strategy %r" % strategy)

    target = sorted(target, key=lambda f: f.id)
    by_id = {f.id: f for f in target}
    det_state = oracle.pretrain(source)
    src_labeled = [(f, f.hidden_label) for f in sorted(source, key=lambda f: f.id)]
    labeled_ids: List[str] = []
    triggers = {e: (k, schedule.per_round[k]) for k, e in enumerate(schedule.trigger_epochs)}
    max_epoch = max(schedule.trigger_epochs) if schedule.rounds else -1
    for epoch in range(max_epoch + 1):
        if epoch in triggers:
            k, budget = triggers[epoch]
            unlabeled = [f for f in target if f.id not in labeled_ids]
            budget = min(budget, len(unlabeled))
            if strategy == "random":
                delta = sample_random(unlabeled, budget, seed + 7919 * k)
            elif strategy == "entropy":
                delta = sample_entropy(unlabeled, budget)
            else:
                X = np.stack(
                    [reweight(f, roi_dim=roi_dim).vector for f, _ in src_labeled]
                )
                y = np.array([lab for _, lab in src_labeled])
                delta = sample_committee(
                    unlabeled, X, y, n_classes, budget, seed + 7919 * k
                )
            labeled_ids.extend(delta)
        labeled = src_labeled + [(by_id[i], by_id[i].hidden_label) for i in labeled_ids]
        det_state = oracle.finetune(det_state, labeled, round_epochs)
    return {
        "accuracy": oracle.evaluate(det_state, eval_frames),
        "selected": labeled_ids,
        "report": None,
    }


def selection_diversity(
    frames_by_id: Dict[str, FrameRecord], selected: Sequence[str], roi_dim: int
) -> float:
    """Mean pairwise cosine distance of the selected re-weighted ROI vectors."""
    vecs = [reweight(frames_by_id[i], roi_dim=roi_dim).vector for i in selected]
    if len(vecs) < 2:
        return 0.0
    dists = [
        1.0 - cosine(vecs[i], vecs[j])
        for i in range(len(vecs))
        for j in range(i + 1, len(vecs))
    ]
    return float(np.mean(dists))


def paired_permutation_pvalue(
    diffs: Sequence[float], n_resamples: int = 10000, seed: int = 0
) -> float:
    """One-sided sign-flip test for mean(diffs) > 0; no distributional assumption."""
    d = np.asarray(diffs, dtype=np.float64)
    rng = np.random.default_rng(seed)
    observed = d.mean()
    signs = rng.choice([-1.0, 1.0], size=(n_resamples, d.size))
    resampled = (signs * d).mean(axis=1)
    return float((1 + np.sum(resampled >= observed)) / (n_resamples + 1))


@dataclass
class BenchmarkReport:
    rows: List[Dict[str, Any]]
    summary: Dict[str, Any]

    def to_json(self) -> str:
        return json.dumps(
            {"rows": self.rows, "summary": self.summary},
            sort_keys=True,
            separators=(",", ":"),
        )

    def write_csv(self, path: str) -> None:
        fields = ["strategy", "seed", "budget", "accuracy", "diversity"]
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: row[k] for k in fields})

    def write_plot_data(self, directory: str) -> None:
        """One CSV per strategy: budget vs mean accuracy, for external plotting."""
        import os

        for strategy, per_budget in self.summary["mean_accuracy"].items():
            path = os.path.join(directory, "plot_%s.csv" % strategy)
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["budget", "mean_accuracy"])
                for budget in sorted(per_budget, key=int):
                    writer.writerow([budget, per_budget[budget]])


def benchmark(
    cfg: SyntheticConfig,
    strategies: Sequence[str] = ("random", "bidomain"),
    seeds: Sequence[int] = tuple(range(20)),
    budget_fracs: Sequence[float] = (0.01, 0.05),
    disc_epochs: int = 150,
) -> BenchmarkReport:
    """Full strategy-by-seed-by-budget sweep with paired statistics vs Random."""
    if not seeds:
        raise ValueError("need at least one seed")
    rows: List[Dict[str, Any]] = []
    roi_dim = cfg.feature_dims[4]
    for seed in seeds:
        data_cfg = replace(cfg, seed=cfg.seed + int(seed))
        source, target, eval_frames = generate(data_cfg)
        by_id = {f.id: f for f in target}
        for frac in budget_fracs:
            budget = max(1, round(frac * cfg.n_target))
            schedule = default_schedule(budget, frac)
            for strategy in strategies:
                result = run_strategy(
                    strategy,
                    source,
                    target,
                    eval_frames,
                    schedule,
                    seed=int(seed),
                    n_classes=cfg.clusters_per_domain,
                    roi_dim=roi_dim,
                    disc_epochs=disc_epochs,
                )
                rows.append(
                    {
                        "strategy": strategy,
                        "seed": int(seed),
                        "budget": budget,
                        "accuracy": result["accuracy"],
                        "diversity": selection_diversity(
                            by_id, result["selected"], roi_dim
                        ),
                    }
                )
    summary = _summarize(rows, strategies, seeds)
    return BenchmarkReport(rows=rows, summary=summary)


def _summarize(rows, strategies, seeds) -> Dict[str, Any]:
    budgets = sorted({r["budget"] for r in rows})
    mean_acc: Dict[str, Dict[str, float]] = {}
    std_acc: Dict[str, Dict[str, float]] = {}
    pvals: Dict[str, Dict[str, float]] = {}

    def accs(strategy, budget):
        per_seed = {
            r["seed"]: r["accuracy"]
            for r in rows
            if r["strategy"] == strategy and r["budget"] == budget
        }
        return [per_seed[s] for s in seeds if s in per_seed]

    for strategy in strategies:
        mean_acc[strategy] = {}
        std_acc[strategy] = {}
        for budget in budgets:
            vals = accs(strategy, budget)
            if vals:
                mean_acc[strategy][str(budget)] = float(np.mean(vals))
                std_acc[strategy][str(budget)] = float(np.std(vals))
    if "random" in strategies:
        for strategy in strategies:
            if strategy == "random":
                continue
            pvals[strategy] = {}
            for budget in budgets:
                a = accs(strategy, budget)
                b = accs("random", budget)
                if a and b and len(a) == len(b):
                    diffs = np.array(a) - np.array(b)
                    pvals[strategy][str(budget)] = paired_permutation_pvalue(
                        diffs, seed=budget
                    )
    return {
        "mean_accuracy": mean_acc,
        "std_accuracy": std_acc,
        "pvalue_vs_random": pvals,
    }
