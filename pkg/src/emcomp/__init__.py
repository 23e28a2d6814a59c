"""emcomp: two-party secure embedding comparison.

A client holding one protected face embedding and a server holding a
database of m protected embeddings decide, without revealing embeddings,
cosine values or any intermediate, either which entries match a public
threshold (indices mode) or whether any entry matches (bit mode).

High-level helpers below wrap the protocol for scripting; the CLI
(`emcomp`) exposes the same operations to the shell, and the kernel
backend in use is reported by `emcomp.kernels.BACKEND`.
"""

from __future__ import annotations

import numpy as np

from .kernels import BACKEND as kernel_backend
from .protocol import Embedding, EmbeddingDb, ProtocolConfig, cosine_oracle, run_simulated
from .ring import RingConfig

__version__ = "0.1.0"


def run_query(db: EmbeddingDb | list, query, threshold: float = 0.35,
              mode: str = "indices", seed: int = 0, variant: str = "fss",
              ring: RingConfig | None = None):
    """One secure 1:N comparison in-process; returns match indices or a bool."""
    if not isinstance(db, EmbeddingDb):
        db = EmbeddingDb([e if isinstance(e, Embedding) else Embedding(np.asarray(e))
                          for e in db])
    if not isinstance(query, Embedding):
        query = Embedding(np.asarray(query))
    pcfg = ProtocolConfig(threshold=threshold, mode=mode, variant=variant,
                          ring=ring or RingConfig())
    outcome, _ = run_simulated(query, db, pcfg, seed=seed)
    if mode == "indices":
        return [int(i) for i in np.flatnonzero(outcome.indices)]
    return bool(outcome.bit)
