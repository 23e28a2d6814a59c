/* AES-NI core for the comparison-function tree walk.
 *
 * Mirrors _dcf_py.py bit for bit: same PRG (fixed-key AES in MMO mode),
 * same key byte layout, same group arithmetic (uint64 wraparound, reduced
 * modulo 2^out_bits only at stores and returns).  The Cython wrapper in
 * _dcf_cy.pyx drives these per-key routines; parity with the Python kernel
 * is enforced by tests.
 */
#ifndef EMCOMP_DCF_CORE_H
#define EMCOMP_DCF_CORE_H

#include <stdint.h>
#include <string.h>
#include <emmintrin.h>
#include <wmmintrin.h>

static __m128i EMCOMP_RK[4][11];

static inline __m128i emcomp_exp_step(__m128i key, __m128i kg) {
    kg = _mm_shuffle_epi32(kg, 0xFF);
    key = _mm_xor_si128(key, _mm_slli_si128(key, 4));
    key = _mm_xor_si128(key, _mm_slli_si128(key, 4));
    key = _mm_xor_si128(key, _mm_slli_si128(key, 4));
    return _mm_xor_si128(key, kg);
}

static void emcomp_expand_key(const uint8_t *key16, __m128i *rk) {
    rk[0] = _mm_loadu_si128((const __m128i *)key16);
    rk[1] = emcomp_exp_step(rk[0], _mm_aeskeygenassist_si128(rk[0], 0x01));
    rk[2] = emcomp_exp_step(rk[1], _mm_aeskeygenassist_si128(rk[1], 0x02));
    rk[3] = emcomp_exp_step(rk[2], _mm_aeskeygenassist_si128(rk[2], 0x04));
    rk[4] = emcomp_exp_step(rk[3], _mm_aeskeygenassist_si128(rk[3], 0x08));
    rk[5] = emcomp_exp_step(rk[4], _mm_aeskeygenassist_si128(rk[4], 0x10));
    rk[6] = emcomp_exp_step(rk[5], _mm_aeskeygenassist_si128(rk[5], 0x20));
    rk[7] = emcomp_exp_step(rk[6], _mm_aeskeygenassist_si128(rk[6], 0x40));
    rk[8] = emcomp_exp_step(rk[7], _mm_aeskeygenassist_si128(rk[7], 0x80));
    rk[9] = emcomp_exp_step(rk[8], _mm_aeskeygenassist_si128(rk[8], 0x1B));
    rk[10] = emcomp_exp_step(rk[9], _mm_aeskeygenassist_si128(rk[9], 0x36));
}

static void emcomp_init_keys(const uint8_t *keys4x16) {
    int j;
    for (j = 0; j < 4; j++)
        emcomp_expand_key(keys4x16 + 16 * j, EMCOMP_RK[j]);
}

static int emcomp_cpu_ok(void) {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("aes");
#else
    return 0;
#endif
}

static inline __m128i emcomp_aes(int j, __m128i m) {
    const __m128i *rk = EMCOMP_RK[j];
    m = _mm_xor_si128(m, rk[0]);
    m = _mm_aesenc_si128(m, rk[1]);
    m = _mm_aesenc_si128(m, rk[2]);
    m = _mm_aesenc_si128(m, rk[3]);
    m = _mm_aesenc_si128(m, rk[4]);
    m = _mm_aesenc_si128(m, rk[5]);
    m = _mm_aesenc_si128(m, rk[6]);
    m = _mm_aesenc_si128(m, rk[7]);
    m = _mm_aesenc_si128(m, rk[8]);
    m = _mm_aesenc_si128(m, rk[9]);
    return _mm_aesenclast_si128(m, rk[10]);
}

static inline __m128i emcomp_mmo(int j, __m128i s) {
    return _mm_xor_si128(emcomp_aes(j, s), s);
}

typedef struct {
    __m128i sl, sr;
    int tl, tr;
    uint64_t vl, vr;
} emcomp_node;

/* child t bits come from the low bit of each child seed's byte 0 */
static inline void emcomp_expand_node(__m128i s, emcomp_node *out) {
    const __m128i clr = _mm_set_epi8(
        (char)0xFF, (char)0xFF, (char)0xFF, (char)0xFF,
        (char)0xFF, (char)0xFF, (char)0xFF, (char)0xFF,
        (char)0xFF, (char)0xFF, (char)0xFF, (char)0xFF,
        (char)0xFF, (char)0xFF, (char)0xFF, (char)0xFE);
    __m128i c0 = emcomp_mmo(0, s);
    __m128i c1 = emcomp_mmo(1, s);
    __m128i c2 = emcomp_mmo(2, s);
    uint64_t v[2];
    out->tl = _mm_cvtsi128_si32(c0) & 1;
    out->tr = _mm_cvtsi128_si32(c1) & 1;
    out->sl = _mm_and_si128(c0, clr);
    out->sr = _mm_and_si128(c1, clr);
    _mm_storeu_si128((__m128i *)v, c2);
    out->vl = v[0];
    out->vr = v[1];
}

static inline uint64_t emcomp_convert(__m128i s) {
    uint64_t v[2];
    _mm_storeu_si128((__m128i *)v, emcomp_mmo(3, s));
    return v[0];
}

static uint64_t emcomp_eval_one(int party, const uint8_t *key, uint64_t x,
                                int in_bits, uint64_t omask) {
    __m128i s = _mm_loadu_si128((const __m128i *)key);
    const uint8_t *cw = key + 16;
    int t = party;
    uint64_t acc = 0;
    emcomp_node nd;
    int lvl;
    for (lvl = 0; lvl < in_bits; lvl++, cw += 26) {
        uint64_t v_cw, vhere;
        int xbit = (int)((x >> (in_bits - 1 - lvl)) & 1);
        emcomp_expand_node(s, &nd);
        memcpy(&v_cw, cw + 16, 8);
        vhere = (xbit ? nd.vr : nd.vl) + (t ? v_cw : 0);
        acc = party ? acc - vhere : acc + vhere;
        if (t) {
            __m128i scw = _mm_loadu_si128((const __m128i *)cw);
            nd.sl = _mm_xor_si128(nd.sl, scw);
            nd.sr = _mm_xor_si128(nd.sr, scw);
            nd.tl ^= cw[24];
            nd.tr ^= cw[25];
        }
        s = xbit ? nd.sr : nd.sl;
        t = xbit ? nd.tr : nd.tl;
    }
    {
        uint64_t fin, tail;
        memcpy(&fin, cw, 8);
        tail = emcomp_convert(s) + (t ? fin : 0);
        acc = party ? acc - tail : acc + tail;
    }
    return acc & omask;
}

static void emcomp_gen_one(uint64_t alpha, uint64_t beta, int in_bits,
                           uint64_t omask, const uint8_t *root0,
                           const uint8_t *root1, uint8_t *k0, uint8_t *k1) {
    __m128i s0 = _mm_loadu_si128((const __m128i *)root0);
    __m128i s1 = _mm_loadu_si128((const __m128i *)root1);
    int t0 = 0, t1 = 1;
    uint64_t va = 0;
    uint8_t *cw0 = k0 + 16;
    uint8_t *cw1 = k1 + 16;
    emcomp_node n0, n1;
    int lvl;

    memcpy(k0, root0, 16);
    memcpy(k1, root1, 16);
    beta &= omask;

    for (lvl = 0; lvl < in_bits; lvl++, cw0 += 26, cw1 += 26) {
        int abit = (int)((alpha >> (in_bits - 1 - lvl)) & 1);
        __m128i s_lose0, s_lose1, s_keep0, s_keep1, s_cw;
        uint64_t v_lose0, v_lose1, v_keep0, v_keep1, v_cw, v_store;
        int t_keep0, t_keep1, t_cw_l, t_cw_r, t_cw_keep, nt0, nt1;

        emcomp_expand_node(s0, &n0);
        emcomp_expand_node(s1, &n1);

        s_lose0 = abit ? n0.sl : n0.sr;
        s_lose1 = abit ? n1.sl : n1.sr;
        v_lose0 = abit ? n0.vl : n0.vr;
        v_lose1 = abit ? n1.vl : n1.vr;
        s_keep0 = abit ? n0.sr : n0.sl;
        s_keep1 = abit ? n1.sr : n1.sl;
        v_keep0 = abit ? n0.vr : n0.vl;
        v_keep1 = abit ? n1.vr : n1.vl;
        t_keep0 = abit ? n0.tr : n0.tl;
        t_keep1 = abit ? n1.tr : n1.tl;

        s_cw = _mm_xor_si128(s_lose0, s_lose1);
        v_cw = v_lose1 - v_lose0 - va;
        if (t1) v_cw = (uint64_t)0 - v_cw;
        if (abit) v_cw += t1 ? (uint64_t)0 - beta : beta;
        va = va - v_keep1 + v_keep0 + (t1 ? (uint64_t)0 - v_cw : v_cw);

        t_cw_l = n0.tl ^ n1.tl ^ abit ^ 1;
        t_cw_r = n0.tr ^ n1.tr ^ abit;
        t_cw_keep = abit ? t_cw_r : t_cw_l;

        v_store = v_cw & omask;
        _mm_storeu_si128((__m128i *)cw0, s_cw);
        _mm_storeu_si128((__m128i *)cw1, s_cw);
        memcpy(cw0 + 16, &v_store, 8);
        memcpy(cw1 + 16, &v_store, 8);
        cw0[24] = cw1[24] = (uint8_t)t_cw_l;
        cw0[25] = cw1[25] = (uint8_t)t_cw_r;

        s0 = t0 ? _mm_xor_si128(s_keep0, s_cw) : s_keep0;
        s1 = t1 ? _mm_xor_si128(s_keep1, s_cw) : s_keep1;
        nt0 = t_keep0 ^ (t0 & t_cw_keep);
        nt1 = t_keep1 ^ (t1 & t_cw_keep);
        t0 = nt0;
        t1 = nt1;
    }
    {
        uint64_t fin = emcomp_convert(s1) - emcomp_convert(s0) - va;
        if (t1) fin = (uint64_t)0 - fin;
        fin &= omask;
        memcpy(cw0, &fin, 8);
        memcpy(cw1, &fin, 8);
    }
}

#endif /* EMCOMP_DCF_CORE_H */
