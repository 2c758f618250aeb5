"""Hot inner-loop kernels for collapsed Gibbs sampling.

The sweep below dominates end-to-end runtime (topic-model fitting visits
every token of the corpus once per sweep, and fold-in inference repeats
the same loop per article), so it is compiled with numba when available.
Both backends run the *same* function source and all randomness enters
through the precomputed ``uniforms`` array, so the compiled path and the
pure-Python fallback produce bit-identical results.

Backend selection, decided once at import:

* ``MEDIASIFT_BACKEND=numpy``  force the pure-Python/numpy fallback
* ``MEDIASIFT_BACKEND=numba``  require numba (ImportError if missing)
* unset                        numba if importable, else fallback

``benchmarks/bench_gibbs.py`` times the two paths against each other.
"""

from __future__ import annotations

import os

import numpy as np


def _gibbs_sweeps_impl(doc_ids, word_ids, z, doc_topic, topic_word,
                       topic_totals, alpha, beta, uniforms, update_topic_counts):
    """Run ``uniforms.shape[0]`` full Gibbs sweeps over the token stream.

    All count arrays and the assignment vector ``z`` are updated in
    place. ``uniforms[s, i]`` is the variate consumed by token ``i``
    during sweep ``s``. With ``update_topic_counts`` False the
    topic-word statistics stay frozen (fold-in inference): only the
    document-topic counts and ``z`` move.

    Bookkeeping per token: remove the token from its current topic's
    counts, score every topic by

        (n_kw + beta) / (n_k + beta * V) * (n_dk + alpha)

    (the collapsed full conditional; the document-length factor is
    constant across topics and omitted), then draw the new topic by
    inverting the cumulative sum at ``u * total``.
    """
    n_topics, n_vocab = topic_word.shape
    n_tokens = doc_ids.shape[0]
    n_sweeps = uniforms.shape[0]
    weights = np.empty(n_topics, dtype=np.float64)
    for s in range(n_sweeps):
        for i in range(n_tokens):
            d = doc_ids[i]
            w = word_ids[i]
            k = z[i]
            doc_topic[d, k] -= 1
            if update_topic_counts:
                topic_word[k, w] -= 1
                topic_totals[k] -= 1
            total = 0.0
            for t in range(n_topics):
                p = (topic_word[t, w] + beta) / (topic_totals[t] + beta * n_vocab) \
                    * (doc_topic[d, t] + alpha)
                weights[t] = p
                total += p
            r = uniforms[s, i] * total
            acc = 0.0
            new_k = n_topics - 1
            for t in range(n_topics):
                acc += weights[t]
                if r < acc:
                    new_k = t
                    break
            z[i] = new_k
            doc_topic[d, new_k] += 1
            if update_topic_counts:
                topic_word[new_k, w] += 1
                topic_totals[new_k] += 1


gibbs_sweeps_py = _gibbs_sweeps_impl

_requested = os.environ.get("MEDIASIFT_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise ValueError(f"MEDIASIFT_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

gibbs_sweeps_njit = None
if _requested != "numpy":
    try:
        import numba
    except ImportError:
        if _requested == "numba":
            raise
    else:
        gibbs_sweeps_njit = numba.njit(cache=True)(_gibbs_sweeps_impl)

if gibbs_sweeps_njit is not None:
    BACKEND = "numba"
    gibbs_sweeps = gibbs_sweeps_njit
else:
    BACKEND = "numpy"
    gibbs_sweeps = gibbs_sweeps_py
