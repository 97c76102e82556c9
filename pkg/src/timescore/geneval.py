"""Plausibility evaluation of generated future news against real articles.

Pipeline: embed generated items, keep the most mutually-diverse handful per
theme and month, then score each month as the mean over kept items of their
best cosine match among that month's real articles. Higher means the
generations live closer to what actually got written.

Embeddings come from a pluggable provider. The HTTP provider posts a JSON
array of strings and expects a JSON array of equal-length float arrays back.
The hashed bag-of-words embedder needs no network and is deterministic, for
tests and offline runs; it is not a quality encoder.
"""

from __future__ import annotations

import hashlib
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np
import requests

from .records import DateYM

DEFAULT_DIM = 384
DEFAULT_N_DIVERSE = 5
DEFAULT_THEMES = (
    "Foreign Affairs",
    "Business",
    "Technology",
    "Politics",
    "Science",
    "Health",
    "Climate",
    "National",
)


class EmbeddingProvider(Protocol):
    dim: int

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


@dataclass(frozen=True)
class GeneratedItem:
    theme: str
    month: DateYM
    headline: str
    abstract: str = ""

    @property
    def text(self) -> str:
        return f"{self.headline} {self.abstract}".strip()


class HashedBagOfWordsEmbedder:
    """Deterministic offline embedder: sha256-bucketed token counts, unit norm.

    Empty or whitespace-only text maps to a fixed basis vector so no input
    ever produces a zero norm.
    """

    def __init__(self, dim: int = DEFAULT_DIM):
        if dim < 2:
            raise ValueError(f"embedding dim must be at least 2: {dim}")
        self.dim = dim

    def _bucket(self, token: str) -> int:
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") % self.dim

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            tokens = text.lower().split()
            if not tokens:
                out[row, 0] = 1.0
                continue
            for tok in tokens:
                out[row, self._bucket(tok)] += 1.0
        return normalize_embeddings(out)


class HttpEmbeddingProvider:
    """Remote encoder behind a plain JSON endpoint.

    Texts go out in order-preserving batches; at most `max_in_flight`
    requests run concurrently. Any transport failure or shape mismatch
    raises RuntimeError, since silent partial embeddings would poison
    every downstream similarity.
    """

    def __init__(
        self,
        endpoint: str,
        dim: int = DEFAULT_DIM,
        batch_size: int = 32,
        max_in_flight: int = 4,
        timeout: float = 30.0,
        session: requests.Session | None = None,
    ):
        if batch_size < 1 or max_in_flight < 1:
            raise ValueError("batch_size and max_in_flight must be positive")
        self.endpoint = endpoint
        self.dim = dim
        self.batch_size = batch_size
        self.max_in_flight = max_in_flight
        self.timeout = timeout
        self._session = session or requests.Session()

    def _post_batch(self, batch: list[str]) -> np.ndarray:
        resp = self._session.post(self.endpoint, json=batch, timeout=self.timeout)
        if resp.status_code != 200:
            raise RuntimeError(f"embedding endpoint returned {resp.status_code}")
        payload = resp.json()
        if not isinstance(payload, list) or len(payload) != len(batch):
            raise RuntimeError(
                f"embedding endpoint returned {len(payload) if isinstance(payload, list) else 'non-list'}"
                f" rows for {len(batch)} texts"
            )
        arr = np.asarray(payload, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != self.dim:
            raise RuntimeError(f"expected {len(batch)}x{self.dim} embeddings, got shape {arr.shape}")
        return arr

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim), dtype=np.float64)
        batches = [list(texts[i : i + self.batch_size]) for i in range(0, len(texts), self.batch_size)]
        with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
            parts = list(pool.map(self._post_batch, batches))
        return np.vstack(parts)


def normalize_embeddings(matrix: np.ndarray) -> np.ndarray:
    """Row-normalize to unit length. A zero-norm row is a hard error."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValueError(f"expected a 2-d embedding matrix, got ndim={matrix.ndim}")
    norms = np.linalg.norm(matrix, axis=1)
    bad = np.where(norms == 0.0)[0]
    if bad.size:
        raise ValueError(f"zero-norm embedding at row {int(bad[0])}")
    return matrix / norms[:, None]


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity undefined for zero-norm vectors")
    return float(np.dot(a, b) / (na * nb))


def greedy_diverse_subset(embeddings: np.ndarray, n_diverse: int = DEFAULT_N_DIVERSE) -> list[int]:
    """Pick up to n_diverse mutually-dissimilar rows, greedily, deterministically.

    Seed with the row whose worst-case similarity to the rest is smallest;
    then repeatedly add the row with the smallest maximum similarity to the
    picks so far. Ties always go to the earliest input index. With n_diverse
    or fewer rows, everything is kept in input order.
    """
    if n_diverse < 1:
        raise ValueError(f"n_diverse must be at least 1: {n_diverse}")
    n = embeddings.shape[0] if hasattr(embeddings, "shape") else len(embeddings)
    if n == 0:
        return []
    if n <= n_diverse:
        return list(range(n))

    x = normalize_embeddings(np.asarray(embeddings))
    sims = x @ x.T

    off_diag = sims.copy()
    np.fill_diagonal(off_diag, -np.inf)
    seed = int(np.argmin(off_diag.max(axis=1)))

    selected = [seed]
    # max similarity of every row to the selected set so far
    closest = sims[:, seed].copy()
    closest[seed] = np.inf
    while len(selected) < n_diverse:
        pick = int(np.argmin(closest))
        selected.append(pick)
        closest = np.maximum(closest, sims[:, pick])
        closest[pick] = np.inf
    return selected


def avg_max_sim(generated: np.ndarray, real: np.ndarray) -> tuple[float, list[float]]:
    """Mean over generated rows of each row's best cosine match among real rows."""
    g = normalize_embeddings(np.asarray(generated))
    r = normalize_embeddings(np.asarray(real))
    if g.shape[1] != r.shape[1]:
        raise ValueError(f"embedding dims differ: {g.shape[1]} vs {r.shape[1]}")
    per_item = (g @ r.T).max(axis=1)
    return float(per_item.mean()), [float(v) for v in per_item]


@dataclass(frozen=True)
class MonthRow:
    month: DateYM
    avg_max_sim: float | None
    n_generated: int
    n_selected: int
    n_real: int
    note: str = ""


@dataclass
class GenEvalReport:
    rows: list[MonthRow]
    overall: float | None
    n_diverse: int
    dim: int

    def to_json_dict(self) -> dict:
        return {
            "overall": self.overall,
            "n_diverse": self.n_diverse,
            "dim": self.dim,
            "months": [
                {
                    "month": str(r.month),
                    "avg_max_sim": r.avg_max_sim,
                    "n_generated": r.n_generated,
                    "n_selected": r.n_selected,
                    "n_real": r.n_real,
                    "note": r.note,
                }
                for r in self.rows
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("month,avg_max_sim,n_generated,n_selected,n_real,note\n")
        for r in self.rows:
            score = "" if r.avg_max_sim is None else repr(r.avg_max_sim)
            buf.write(f"{r.month},{score},{r.n_generated},{r.n_selected},{r.n_real},{r.note}\n")
        return buf.getvalue()

    def summary_text(self) -> str:
        lines = ["month    avg_max_sim  kept/gen  real  note"]
        for r in self.rows:
            score = "-" if r.avg_max_sim is None else f"{r.avg_max_sim:.4f}"
            lines.append(
                f"{r.month}  {score:>11}  {r.n_selected:>4}/{r.n_generated:<4} {r.n_real:>4}  {r.note}"
            )
        overall = "-" if self.overall is None else f"{self.overall:.4f}"
        lines.append(f"overall  {overall:>11}")
        return "\n".join(lines)


def monthly_report(
    generated: Iterable[GeneratedItem],
    real_by_month: Mapping[DateYM, Sequence[str]],
    provider: EmbeddingProvider,
    n_diverse: int = DEFAULT_N_DIVERSE,
) -> GenEvalReport:
    """Score every month that shows up on either side.

    Per theme and month, the diverse subset is chosen first; the month score
    pools the survivors across themes. Months with no real articles or no
    generated items get a flagged row with no score instead of failing the
    whole report.
    """
    items = list(generated)
    texts = [it.text for it in items]
    embeddings = provider.embed(texts) if texts else np.zeros((0, provider.dim))
    if embeddings.shape[0] != len(items):
        raise RuntimeError(f"provider returned {embeddings.shape[0]} embeddings for {len(items)} items")

    by_group: dict[tuple[DateYM, str], list[int]] = {}
    for idx, item in enumerate(items):
        by_group.setdefault((item.month, item.theme), []).append(idx)

    kept_by_month: dict[DateYM, list[int]] = {}
    gen_count_by_month: dict[DateYM, int] = {}
    for (month, _theme), idxs in sorted(
        by_group.items(), key=lambda kv: (kv[0][0], kv[0][1])
    ):
        gen_count_by_month[month] = gen_count_by_month.get(month, 0) + len(idxs)
        local = greedy_diverse_subset(embeddings[idxs], n_diverse)
        kept_by_month.setdefault(month, []).extend(idxs[i] for i in local)

    months = sorted(set(kept_by_month) | set(real_by_month))
    rows: list[MonthRow] = []
    scores: list[float] = []
    for month in months:
        kept = kept_by_month.get(month, [])
        real_texts = list(real_by_month.get(month, ()))
        n_gen = gen_count_by_month.get(month, 0)
        if not kept:
            rows.append(MonthRow(month, None, n_gen, 0, len(real_texts), "no_generated"))
            continue
        if not real_texts:
            rows.append(MonthRow(month, None, n_gen, len(kept), 0, "no_real"))
            continue
        real_emb = provider.embed(real_texts)
        score, _ = avg_max_sim(embeddings[kept], real_emb)
        scores.append(score)
        rows.append(MonthRow(month, score, n_gen, len(kept), len(real_texts)))

    overall = sum(scores) / len(scores) if scores else None
    return GenEvalReport(rows=rows, overall=overall, n_diverse=n_diverse, dim=provider.dim)


def load_generated_items(payload: object) -> list[GeneratedItem]:
    """Materialize GeneratedItems from decoded JSON (a list of objects)."""
    if not isinstance(payload, list):
        raise ValueError("generated items payload must be a JSON array")
    items = []
    for i, obj in enumerate(payload):
        if not isinstance(obj, dict):
            raise ValueError(f"item {i} is not an object")
        try:
            items.append(
                GeneratedItem(
                    theme=str(obj["theme"]),
                    month=DateYM.parse(str(obj["month"])),
                    headline=str(obj["headline"]),
                    abstract=str(obj.get("abstract", "")),
                )
            )
        except (KeyError, ValueError) as exc:
            raise ValueError(f"item {i}: {exc}") from exc
    return items


def load_real_by_month(payload: object) -> dict[DateYM, list[str]]:
    """Materialize the real-article map from decoded JSON ({'YYYY-MM': [texts]})."""
    if not isinstance(payload, dict):
        raise ValueError("real articles payload must be a JSON object keyed by month")
    out: dict[DateYM, list[str]] = {}
    for key, texts in payload.items():
        month = DateYM.parse(str(key))
        if not isinstance(texts, list):
            raise ValueError(f"month {key}: expected a list of texts")
        out[month] = [str(t) for t in texts]
    return out


def report_to_json(report: GenEvalReport) -> str:
    return json.dumps(report.to_json_dict(), ensure_ascii=False, separators=(",", ":"))
