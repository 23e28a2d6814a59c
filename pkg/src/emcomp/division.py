"""Fixed-point division on shares: y / z for z > 0.

Pipeline (all steps batched over the m pairs, constant round count):

1. operands are lifted from `frac` to a working precision F =
   min(2*frac, (ell-7)//2) fractional bits, which also becomes the output
   precision - the extra bits keep the final relative error far inside
   2^(1-frac) without risking product overflow;
2. z is scaled into [1/2, 1) by octave: one batch of sign tests against the
   public boundaries 2^e (a single masked reveal evaluated at public
   offsets) yields a one-hot octave selector, and s = 2^(-e-1) is applied
   to BOTH operands, so no de-normalisation is needed;
3. an affine first guess w = 2.9142135 - 2*z_n (local: shift and public
   constant) starts |1 - z_n*w| <= 0.0858;
4. three Goldschmidt iterations square the residual away:
   q <- q + q*e,  e <- e*e.  Each iteration is two products in one round
   plus one rounding-truncation round.  Three iterations leave a relative
   residual ~3e-9, fixed by the accuracy sweep in the tests.

The comparison backend is injected (`compare_ge`), so the same code serves
the single-round FSS gates and the logarithmic-round SS baseline.

The gate's public surface takes masked wires (y_hat, z_hat): callers mask
[y], [z] with dealer randomness, reveal the hats, and the gate locally
re-shares them before iterating.  The hats never meet an unmasked value.
"""

from __future__ import annotations

import numpy as np

from .fss import MaskedValue, truncate_many
from .ring import RingConfig
from .sharing import ArithShare, beaver_mul_many, pub

GOLDSCHMIDT_ITERS = 3
RECIP_CONST = 2.9142135623730951  # 1 + sqrt(2) + ~, minimax affine on [1/2, 1)

Z_MIN_EXP = -4  # z covered on [2^-4, 2^3)
Z_MAX_EXP = 3


def div_frac(cfg: RingConfig) -> int:
    """Working/output fractional bits; products must stay below 2^(ell-1)."""
    F = min(2 * cfg.frac, (cfg.ell - 7) // 2)
    if F < cfg.frac:
        raise ValueError(
            f"ring too narrow for division: ell={cfg.ell} gives F={F} < frac={cfg.frac}"
        )
    return F


def octave_boundaries(cfg: RingConfig) -> list[int]:
    """Exponents e of the public comparison points 2^e."""
    return list(range(Z_MIN_EXP + 1, Z_MAX_EXP))


def octave_scales(cfg: RingConfig) -> np.ndarray:
    """Fixed-point 2^(-e-1) per octave, F fractional bits."""
    F = div_frac(cfg)
    exps = [Z_MIN_EXP] + octave_boundaries(cfg)
    return np.array(
        [cfg.reduce(round(2.0 ** (-(e + 1)) * (1 << F))) for e in exps], dtype=np.uint64
    )


def mul_names(iters: int = GOLDSCHMIDT_ITERS) -> list[str]:
    """Product/truncation step names, in consumption order."""
    names = ["scale_z", "scale_y", "e0", "q0"]
    for i in range(1, iters + 1):
        names.append(f"it{i}q")
        if i < iters:
            names.append(f"it{i}e")
    return names


def _encode_f(cfg: RingConfig, x: float, F: int) -> np.uint64:
    return np.uint64(cfg.reduce(round(x * (1 << F))))


def goldschmidt_divide(y: ArithShare, z: ArithShare, mat, ch, cfg: RingConfig,
                       compare_ge, iters: int = GOLDSCHMIDT_ITERS,
                       threads: int = 1) -> ArithShare:
    """Shares of y/z at F fractional bits.  Operands arrive at `frac` bits."""
    party = y.party
    F = div_frac(cfg)
    up = np.uint64(F - cfg.frac)
    y_f = ArithShare(party, cfg.reduce_arr(y.val << up))
    z_f = ArithShare(party, cfg.reduce_arr(z.val << up))

    # octave one-hot from sign tests against the public boundaries
    bounds = np.array([_encode_f(cfg, 2.0**e, F) for e in octave_boundaries(cfg)],
                      dtype=np.uint64)
    vs = compare_ge(z_f, bounds)
    scales = octave_scales(cfg)
    one = pub(party, np.uint64(1))
    onehot = [ArithShare(party, cfg.reduce_arr(one - vs[0].val))]
    onehot += [
        ArithShare(party, cfg.reduce_arr(vs[j - 1].val - vs[j].val))
        for j in range(1, len(vs))
    ]
    onehot.append(vs[-1])
    s_sel = np.zeros_like(y.val)
    for o, s in zip(onehot, scales):
        s_sel = s_sel + o.val * s
    s_sel = ArithShare(party, cfg.reduce_arr(s_sel))

    def mul2(n1, x1, y1, n2, x2, y2):
        prods = beaver_mul_many(
            [(x1, y1, mat.take(f"div:{n1}")), (x2, y2, mat.take(f"div:{n2}"))], ch, cfg
        )
        return truncate_many(
            [(prods[0], mat.take(f"div:{n1}:t")), (prods[1], mat.take(f"div:{n2}:t"))],
            ch, cfg, rounding=True, threads=threads,
        )

    z_n, y_n = mul2("scale_z", z_f, s_sel, "scale_y", y_f, s_sel)

    # affine reciprocal guess, local: w = C - 2 z_n
    w = ArithShare(party, cfg.reduce_arr(
        pub(party, _encode_f(cfg, RECIP_CONST, F)) - (z_n.val << np.uint64(1))
    ))
    zw, q = mul2("e0", z_n, w, "q0", y_n, w)
    e = ArithShare(party, cfg.reduce_arr(pub(party, np.uint64(1) << np.uint64(F)) - zw.val))

    for i in range(1, iters + 1):
        if i < iters:
            qe, ee = mul2(f"it{i}q", q, e, f"it{i}e", e, e)
            e = ee
        else:
            (prod,) = beaver_mul_many([(q, e, mat.take(f"div:it{i}q"))], ch, cfg)
            (qe,) = truncate_many([(prod, mat.take(f"div:it{i}q:t"))], ch, cfg,
                                  rounding=True, threads=threads)
        q = ArithShare(party, cfg.reduce_arr(q.val + qe.val))
    return q


def div_gate(y_hat: MaskedValue, z_hat: MaskedValue, r_y, r_z, mat, ch,
             cfg: RingConfig, compare_ge, party: int, threads: int = 1) -> ArithShare:
    """Masked-wire surface: inputs arrive pre-masked, output is a share
    of the quotient at F fractional bits (relative error <= 2^(1-frac))."""
    y = ArithShare(party, cfg.reduce_arr(pub(party, y_hat.hat) - r_y.consume()))
    z = ArithShare(party, cfg.reduce_arr(pub(party, z_hat.hat) - r_z.consume()))
    return goldschmidt_divide(y, z, mat, ch, cfg, compare_ge, threads=threads)
