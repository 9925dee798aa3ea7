"""Acceptance checks for the headline guarantees, one printed line each.

Run with -s to see the conformance report; every test prints a single
PASS/FAIL line with the measured numbers behind the verdict.
"""

import json
import time
from collections import Counter

import numpy as np

from oracles import (
    average_precision_by_enumeration,
    dft2_matrix,
    logistic_regression_reference,
    shannon_entropy,
)
from semnull.cli import run
from semnull.losses import bce_loss, contrastive_loss
from semnull.metrics import average_precision
from semnull.patches import (
    SelectionConfig,
    select_and_reassemble,
    spectral_entropy,
    tile,
)
from semnull.projection import fit_nullspace
from semnull.records import EmbeddingRecord, EmbeddingSet, write_embeddings
from semnull.training import TrainConfig, head_objective, read_head


def report(name, ok, detail):
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def test_projector_algebra_suite():
    counts = {4: 45, 16: 30, 64: 21, 768: 9}
    thresholds = (1e-6, 0.05, 0.2)
    rng = np.random.default_rng(8000)
    worst_sym = worst_idem = worst_trace = worst_annih = 0.0
    total = 0
    start = time.perf_counter()
    for d, reps in counts.items():
        for i in range(reps):
            n = int(rng.integers(1, 2 * d + 1))
            theta = thresholds[i % 3]
            if i % 4 == 3 and n >= 3:
                r = max(1, n // 3)
                corpus = rng.normal(size=(n, r)) @ rng.normal(size=(r, d))
            else:
                corpus = rng.normal(size=(n, d))
            ns = fit_nullspace(corpus, threshold=theta)
            P = ns.matrix
            worst_sym = max(worst_sym, np.linalg.norm(P - P.T) / d)
            worst_idem = max(worst_idem, np.linalg.norm(P @ P - P) / d)
            worst_trace = max(
                worst_trace, abs(np.trace(P) - (d - ns.rank_kept))
            )
            sv = np.linalg.svd(corpus, compute_uv=False)
            _, _, Vt = np.linalg.svd(corpus, full_matrices=False)
            retained = Vt[sv > theta * sv[0]]
            if retained.size:
                worst_annih = max(
                    worst_annih,
                    np.linalg.norm(retained @ P) / np.linalg.norm(retained),
                )
            total += 1
    elapsed = time.perf_counter() - start
    ok = (
        total >= 100
        and worst_sym <= 1e-6
        and worst_idem <= 1e-5
        and worst_trace <= 1e-4
        and worst_annih <= 1e-6
        and elapsed < 60.0
    )
    report(
        "projector-algebra",
        ok,
        f"{total} corpora, sym/d={worst_sym:.2e}, idem/d={worst_idem:.2e}, "
        f"trace={worst_trace:.2e}, annih={worst_annih:.2e}, {elapsed:.1f}s",
    )


def test_patch_selection_suite():
    rng = np.random.default_rng(8100)
    cfg = SelectionConfig(seed=11)
    images = [
        rng.integers(0, 256, size=(224, 224, 3), dtype=np.uint8)
        for _ in range(100)
    ]
    start = time.perf_counter()
    mosaics = [select_and_reassemble(img, cfg) for img in images]
    elapsed = time.perf_counter() - start

    composed = True
    deterministic = True
    for img, mosaic in zip(images, mosaics):
        if mosaic.shape != (224, 224, 3):
            composed = False
            break
        patches, _ = tile(img, 32)
        entropies = [spectral_entropy(p) for p in patches]
        order = sorted(range(49), key=lambda i: (-entropies[i], i))
        chosen = order[:25] + order[-24:]
        expected = Counter(patches[i].tobytes() for i in chosen)
        blocks, _ = tile(mosaic, 32)
        if Counter(b.tobytes() for b in blocks) != expected:
            composed = False
            break
    for img, mosaic in zip(images[:5], mosaics[:5]):
        if not np.array_equal(select_and_reassemble(img, cfg), mosaic):
            deterministic = False

    oracle_agrees = True
    for img in images[:3]:
        patches, _ = tile(img, 32)
        for patch in patches[::7]:
            spectra = [
                np.abs(dft2_matrix(patch[:, :, c].astype(np.float64)))
                for c in range(3)
            ]
            want = float(np.mean([shannon_entropy(s.ravel()) for s in spectra]))
            if abs(spectral_entropy(patch) - want) > 1e-9:
                oracle_agrees = False

    flat = spectral_entropy(np.full((32, 32, 3), 55, dtype=np.uint8))
    x = np.arange(32, dtype=np.float64)
    wave = 40.0 * np.cos(2.0 * np.pi * 5.0 * x / 32.0)
    cosine = np.repeat(np.tile(wave, (32, 1))[:, :, None], 3, axis=2)
    two_bin = spectral_entropy(cosine)

    ok = (
        composed
        and deterministic
        and oracle_agrees
        and abs(flat) <= 1e-9
        and abs(two_bin - np.log(2.0)) <= 1e-9
        and elapsed < 5.0
    )
    report(
        "patch-selection",
        ok,
        f"100 images composed={composed} deterministic={deterministic} "
        f"oracle={oracle_agrees} flat={flat:.2e} "
        f"|cos-ln2|={abs(two_bin - np.log(2.0)):.2e}, {elapsed:.2f}s",
    )


def _central_fd(fn, x, step=1e-5):
    grad = np.zeros_like(x)
    for i in range(x.size):
        hi = x.copy()
        lo = x.copy()
        hi.flat[i] += step
        lo.flat[i] -= step
        grad.flat[i] = (fn(hi) - fn(lo)) / (2.0 * step)
    return grad


def _rel_err(analytic, numeric):
    scale = max(np.linalg.norm(numeric), 1e-12)
    return np.linalg.norm(analytic - numeric) / scale


def test_gradient_suite():
    rng = np.random.default_rng(8200)
    worst = 0.0
    instances = 0
    for _ in range(20):
        n = int(rng.integers(3, 8))
        d = int(rng.integers(2, 6))
        feats = rng.normal(size=(n, d))
        feats /= np.linalg.norm(feats, axis=1, keepdims=True)
        labels = rng.integers(0, 2, size=n)
        tau = float(rng.uniform(0.05, 0.5))
        _, grad = contrastive_loss(feats, labels, tau)

        def con_loss(flat, shape=feats.shape, y=labels, t=tau):
            return contrastive_loss(flat.reshape(shape), y, t)[0]

        worst = max(worst, _rel_err(grad.ravel(), _central_fd(con_loss, feats.ravel())))
        instances += 1
    for _ in range(20):
        n = int(rng.integers(3, 11))
        logits = rng.normal(size=n) * 3.0
        labels = rng.integers(0, 2, size=n)
        _, grad = bce_loss(logits, labels)

        def bce(z, y=labels):
            return bce_loss(z, y)[0]

        worst = max(worst, _rel_err(grad, _central_fd(bce, logits)))
        instances += 1
    for k in range(20):
        n = int(rng.integers(4, 8))
        d = int(rng.integers(3, 6))
        h = int(rng.integers(2, 5))
        X = rng.normal(size=(n, d))
        labels = np.array([0, 1] * (n // 2) + [1] * (n % 2))
        cfg = TrainConfig(
            bce_weight=(0.0, 0.2, 0.7, 1.0)[k % 4],
            adapter_width=h,
            normalize_contrastive=bool(k % 2),
        )
        adapter = rng.normal(size=(h, d))
        w = rng.normal(size=h)
        b = float(rng.normal())
        _, grads = head_objective(adapter, w, b, X, labels, cfg)
        analytic = np.concatenate(
            [grads["adapter"].ravel(), grads["classifier_w"], [grads["classifier_b"]]]
        )

        def packed(theta, X=X, y=labels, cfg=cfg, h=h, d=d):
            A = theta[: h * d].reshape(h, d)
            return head_objective(A, theta[h * d : h * d + h], float(theta[-1]), X, y, cfg)[0]

        flat = np.concatenate([adapter.ravel(), w, [b]])
        worst = max(worst, _rel_err(analytic, _central_fd(packed, flat)))
        instances += 1
    ok = instances == 60 and worst <= 1e-4
    report("gradients", ok, f"{instances} instances, worst rel err={worst:.2e}")


def test_average_precision_suite():
    rng = np.random.default_rng(8300)
    worst = 0.0
    for case in range(1000):
        size = int(rng.integers(1, 65))
        labels = rng.integers(0, 2, size=size)
        if not labels.any():
            labels[int(rng.integers(0, size))] = 1
        scores = rng.uniform(size=size)
        if case % 2:
            scores = np.round(scores, 1)
        diff = abs(
            average_precision(scores, labels)
            - average_precision_by_enumeration(scores, labels)
        )
        worst = max(worst, diff)
    fixture = average_precision([0.9, 0.8, 0.3], [1, 0, 1])
    fixture_diff = abs(fixture - 5.0 / 6.0)
    ok = worst <= 1e-12 and fixture_diff <= 1e-12
    report(
        "average-precision",
        ok,
        f"1000 sets, worst diff={worst:.2e}, fixture diff={fixture_diff:.2e}",
    )


def test_semantic_shortcut_mechanism():
    d, sem_dim, n_pairs = 64, 10, 1000
    sigma_sem, margin, bias_scale = 60.0, 2.0, 600.0
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    frame = np.linalg.qr(rng.normal(size=(d, sem_dim + 1)))[0]
    sem_basis = frame[:, :sem_dim].T
    artifact = frame[:, sem_dim]
    bias_dir = rng.normal(size=sem_dim)
    bias_dir /= np.linalg.norm(bias_dir)

    def make(bias_sign):
        c_real = rng.normal(size=(n_pairs, sem_dim)) * sigma_sem
        c_fake = (
            rng.normal(size=(n_pairs, sem_dim)) * sigma_sem
            + bias_sign * bias_scale * bias_dir
        )
        semantic = np.concatenate([c_real, c_fake]) @ sem_basis
        y = np.repeat([0, 1], n_pairs)
        shift = np.where(y[:, None] == 1, margin, -margin) * artifact
        return semantic + rng.normal(size=(2 * n_pairs, d)) + shift, y, semantic

    X_train, y_train, corpus = make(+1.0)
    X_test, y_test, _ = make(-1.0)
    ns = fit_nullspace(corpus, threshold=1e-6)

    def probe(train, test):
        with np.errstate(over="ignore"):
            w, b = logistic_regression_reference(train, y_train, lr=0.5, iters=300)
        return float(np.mean(((test @ w + b) >= 0.0) == (y_test == 1)))

    raw_acc = probe(X_train, X_test)
    decoupled_acc = probe(X_train @ ns.matrix, X_test @ ns.matrix)
    elapsed = time.perf_counter() - start
    ok = (
        ns.rank_kept == sem_dim
        and raw_acc <= 0.75
        and decoupled_acc >= 0.95
        and elapsed < 30.0
    )
    report(
        "shortcut-mechanism",
        ok,
        f"raw probe={raw_acc:.3f} (<=0.75), decoupled probe={decoupled_acc:.3f} "
        f"(>=0.95), rank_kept={ns.rank_kept}, {elapsed:.1f}s",
    )


def _separable_embedding_file(path):
    rng = np.random.default_rng(2718)
    d, n, separation, text_rank = 16, 512, 6.0, 3
    axis = rng.normal(size=d)
    axis /= np.linalg.norm(axis)
    basis = []
    while len(basis) < text_rank:
        v = rng.normal(size=d)
        v -= (v @ axis) * axis
        for u in basis:
            v -= (v @ u) * u
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            basis.append(v / norm)
    text_basis = np.stack(basis)
    y = np.repeat([0, 1], n // 2)
    X = rng.normal(size=(n, d)) + np.where(y[:, None] == 1, separation, -separation) * axis
    records = tuple(
        EmbeddingRecord(
            id=f"img-{i:04d}",
            label=int(y[i]),
            source="sdv1.4" if y[i] else "real",
            visual=X[i].astype(np.float32),
            text=(rng.normal(size=text_rank) @ text_basis).astype(np.float32),
        )
        for i in range(n)
    )
    with open(path, "wb") as fh:
        write_embeddings(EmbeddingSet(dim=d, records=records), fh)


def test_end_to_end_determinism(tmp_path):
    defaults = TrainConfig()
    assert (
        defaults.epochs,
        defaults.batch_size,
        defaults.learning_rate,
        defaults.bce_weight,
    ) == (2, 32, 2e-4, 0.2)

    embeddings = tmp_path / "train.nseb"
    _separable_embedding_file(embeddings)
    proj = tmp_path / "p.nspj"
    head = tmp_path / "h.nshd"
    assert run(["nullspace", "--embeddings", str(embeddings),
                "--out", str(proj)]).exit_code == 0

    blobs = []
    for _ in range(2):
        assert run(["train", "--embeddings", str(embeddings),
                    "--proj", str(proj), "--width", "8", "--seed", "0",
                    "--out", str(head)]).exit_code == 0
        blobs.append(head.read_bytes())
    with open(head, "rb") as fh:
        _, stored_cfg = read_head(fh)

    report_path = tmp_path / "report.json"
    assert run(["eval", "--embeddings", str(embeddings), "--proj", str(proj),
                "--head", str(head), "--report", str(report_path)]).exit_code == 0
    mean_acc = json.loads(report_path.read_text())["mean_acc"]

    ok = (
        blobs[0] == blobs[1]
        and (stored_cfg.epochs, stored_cfg.batch_size,
             stored_cfg.learning_rate, stored_cfg.bce_weight)
        == (2, 32, 2e-4, 0.2)
        and mean_acc >= 0.99
    )
    report(
        "end-to-end",
        ok,
        f"mean_acc={mean_acc:.4f} (>=0.99), byte-identical heads={blobs[0] == blobs[1]}",
    )
