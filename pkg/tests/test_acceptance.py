"""Acceptance suite: one check per criterion at the stated tolerances.

Run with pytest (summary lines appear at the end of the session) or
directly with ``python3 tests/test_acceptance.py``.
"""

import json
import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from acceptance_report import record  # noqa: E402
from wavediv.besov import besov_norm, count_large, scale_lp, weighted_partial_sums  # noqa: E402
from wavediv.cli import main as cli_main  # noqa: E402
from wavediv.divergence import EstimatorSettings, divergence_exponent, partial_sum  # noqa: E402
from wavediv.dyadic import BesovParams, CoefficientField, unit_cube_positions  # noqa: E402
from wavediv.generators import (SaturatingConfig, add_fields, ball_violations, branch_field,  # noqa: E402
                                canonical_rational_field, default_cutoff, deterministic_e,
                                holder_residual_field, lineability_combination, point_divergent,
                                residual_witness, sandwich_j0, sandwich_violations, saturating_random)
from wavediv.rng import keyed_uniform  # noqa: E402
from wavediv.spectrum import alpha_seeds, coefficient_count_spectrum, gamma_alpha, test_points  # noqa: E402
from wavediv.systems import find_dyadic_covering, haar_system  # noqa: E402

HAAR = haar_system(1)
P = BesovParams(0.5, 2.0, 2.0, 1)
P0 = BesovParams(0.0, 2.0, 2.0, 1)
SEEDS = range(5)


def _cov():
    return find_dyadic_covering(HAAR, 1, 1.0)


def _fmt(v):
    return "-inf" if v == -math.inf else f"{v:.4g}"


def criterion_1():
    t = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        h, s = Path(tmp) / "h.json", Path(tmp) / "s.json"
        rc_h = cli_main(["check-covering", "--system", "haar", "--max-depth", "1", "--c0", "1", "-o", str(h)])
        rc_s = cli_main(["check-covering", "--system", "schauder", "--max-depth", "1", "--c0", "1",
                         "-o", str(s)])
        ho, so = json.loads(h.read_text()), json.loads(s.read_text())
    dt = time.perf_counter() - t
    trip = [(x["i"], x["j"], x["k"]) for x in ho.get("triplets", [])]
    ok = (rc_h == 0 and ho["M"] == 1 and ho["L"] == 2 and ho["c0"] == 1.0
          and trip == [(1, 1, [0]), (1, 1, [1])] and rc_s == 2 and so["witness"] == [0.0] and dt < 1.0)
    return ok, f"haar exit={rc_h} M={ho.get('M')} L={ho.get('L')}; schauder exit={rc_s} " \
               f"witness={so.get('witness')}; {dt:.2f}s"


def criterion_2():
    t = time.perf_counter()
    E = deterministic_e(P, 18)
    worst = -math.inf
    for j in range(1, 19):
        ratio = scale_lp(E, P, j) / (math.sqrt(2 * j) * 2.0 ** (-math.log2(j) ** 2))
        worst = max(worst, ratio)
    part = weighted_partial_sums(E, P)
    inc = float(part[-1] - part[-5])
    dt = time.perf_counter() - t
    ok = worst <= 1.0 and math.isfinite(part[-1]) and inc < 1e-6 and dt < 5.0
    return ok, f"max eps_j / bound = {worst:.4f}; functional = {part[-1]:.6g}, " \
               f"last-4 increment = {inc:.2e}; {dt:.2f}s"


def criterion_3():
    t = time.perf_counter()
    E = deterministic_e(P, 18)
    alphas = (1, 2, 4)
    cs = coefficient_count_spectrum(E, P, [gamma_alpha(P, a) for a in alphas])
    dt = time.perf_counter() - t
    ok = dt < 30.0
    parts = []
    for a, sl, cnt in zip(alphas, cs.slopes, cs.counts):
        good = bool(np.isfinite(sl) and abs(sl - 1.0 / a) <= 0.15)
        ok &= good
        nz = int(np.count_nonzero(cnt))
        parts.append(f"alpha={a}: slope={'undefined' if not np.isfinite(sl) else f'{sl:.3f}'} "
                     f"(target {1 / a:.3g}, nonzero scales {nz})")
    return ok, "; ".join(parts) + f"; {dt:.2f}s"


def _saturating(seed, jmax=16):
    return saturating_random(SaturatingConfig(P, _cov(), jmax, seed))


def criterion_4():
    t = time.perf_counter()
    ok = True
    mins, meds = [], []
    for seed in SEEDS:
        C = _saturating(seed)
        pts = test_points(1000 + seed, 500, 50, 1)
        dh = divergence_exponent(C, HAAR, pts)
        mn, med = float(dh.min()), float(np.median(dh))
        mins.append(mn)
        meds.append(med)
        ok &= mn >= -P.s - 0.30 and abs(med + P.s) <= 0.20
    dt = time.perf_counter() - t
    ok &= dt < 120
    return ok, f"min over seeds {min(mins):.3f} (need >= {-P.s - 0.3:.2f}); medians " \
               f"{', '.join(f'{m:.3f}' for m in meds)} (need in [-0.7, -0.3]); {dt:.1f}s"


def _suite_fields():
    cov = _cov()
    out = {"E": deterministic_e(P, 16)}
    for seed in SEEDS:
        out[f"saturating[{seed}]"] = _saturating(seed)
    out["point(1/3)"] = point_divergent(P0, HAAR, cov, 1 / 3, 18)
    out["lineability"] = lineability_combination(P, [0.5, 1.5], [2.0, -3.0], 14)
    for n in (3, 5):
        F = canonical_rational_field(n, P, cov.M)
        out[f"residual[{n}]"] = residual_witness(P, cov.M, F, n, default_cutoff(n, cov.M) + 6).center
    out["holder"] = holder_residual_field(0.5, 2, 14, CoefficientField.zeros(1, 14, BesovParams(0.5, math.inf,
                                                                                                  math.inf, 1)))
    out["branch"] = branch_field(P, 14, -1.0, 0.0)
    return out


def criterion_5():
    pts = np.concatenate([test_points(77, 200, 20, 1), [[1 / 3], [0.0]]])
    st = EstimatorSettings()
    worst, ok, bad = -math.inf, True, []
    for name, F in _suite_fields().items():
        b = F.besov
        Pq = BesovParams(b.s, b.p, math.inf, b.d)
        B = besov_norm(F, Pq)
        bound = b.d_over_p - b.s + math.log2(B * HAAR.sup_bound) / st.j_min
        dh = np.atleast_1d(divergence_exponent(F, HAAR, pts, st))
        margin = float(dh.max() - bound)
        worst = max(worst, margin)
        if margin > 0:
            ok = False
            bad.append(f"{name} exceeds by {margin:.3g}")
    return ok, f"{len(_suite_fields())} fields, worst (max delta_hat - bound) = {worst:.4g}" + \
        (f"; {'; '.join(bad)}" if bad else "")


def criterion_6():
    t = time.perf_counter()
    A = alpha_seeds(2, [10, 12, 14, 16], 50, P, seed=6)
    assert A.check()
    C = _saturating(0)
    dh = divergence_exponent(C, HAAR, A.points)
    dt = time.perf_counter() - t
    need = A.gamma_target - 0.35
    ok = bool(dh.min() >= need) and dt < 60
    return ok, f"min delta_hat {dh.min():.3f}, median {np.median(dh):.3f} (need >= {need:.2f}); {dt:.2f}s"


def criterion_7():
    t = time.perf_counter()
    F = point_divergent(P0, HAAR, _cov(), 1 / 3, 18)
    d0 = divergence_exponent(F, HAAR, 1 / 3)
    others = keyed_uniform(7, np.arange(20))
    dh = divergence_exponent(F, HAAR, others)
    counts = max(count_large(F, j, -1e9) for j in range(19))
    dt = time.perf_counter() - t
    ok = 0.35 <= d0 <= 0.55 and bool(np.all(dh <= 0.5)) and counts <= 1 and dt < 10
    return ok, f"delta_hat(1/3) = {d0:.4f} (need in [0.35, 0.55]); max at 20 other points " \
               f"{_fmt(float(dh.max()))}; max count per scale {counts}; {dt:.2f}s"


def criterion_8():
    t = time.perf_counter()
    rng = np.random.default_rng(8)
    ks = [-5, -4, -3, -2, -1, 1, 2, 3, 4, 5]
    ok, j0s, fails = True, [], []
    for trial in range(20):
        n = int(rng.integers(1, 5))
        while True:
            a = list(3.0 - 3.0 * rng.random(n))  # (0, 3]
            if len(set(a)) == n:
                break
        k = [int(v) for v in rng.choice(ks, size=n)]
        j0 = sandwich_j0(a, k, j_scan=64)
        if j0 is None:
            ok = False
            fails.append(f"#{trial} a={[round(float(x), 3) for x in a]} k={k}")
            j0s.append(None)
            continue
        j0s.append(j0)
        D = lineability_combination(P, a, k, 14)
        if sandwich_violations(D, P, a, k, j0) != 0:
            ok = False
            fails.append(f"#{trial} entry violation")
    dt = time.perf_counter() - t
    ok &= dt < 10
    found = [j for j in j0s if j is not None]
    msg = f"{len(found)}/20 combinations with j0 <= 64 (max j0 {max(found) if found else '-'}); {dt:.2f}s"
    return ok, msg + (f"; failing: {', '.join(fails)}" if fails else "")


def criterion_9():
    t = time.perf_counter()
    cov = _cov()
    rng = np.random.default_rng(9)
    ok, checked = True, 0
    for n in (3, 5):
        F = canonical_rational_field(n, P, cov.M)
        N_n = default_cutoff(n, cov.M)
        jmax = N_n + 6
        w = residual_witness(P, cov.M, F, n, jmax)
        for _ in range(100):
            sc = {}
            for j in range(jmax + 1):
                k = unit_cube_positions(j, 1)
                keep = rng.random(len(k)) < 0.3
                if keep.any():
                    sc[j] = (np.ones(keep.sum(), dtype=int), k[keep], rng.normal(size=keep.sum()))
            delta = CoefficientField.from_arrays(1, jmax, P, sc)
            nrm = besov_norm(delta, P)
            delta = delta.map_values(lambda j, b: b.v * (0.99 * w.radius / nrm))
            D = add_fields(w.center, delta)
            ok &= ball_violations(w, D, P, range(N_n, N_n + 7)) == 0
            checked += 1
    dt = time.perf_counter() - t
    ok &= dt < 30
    return ok, f"{checked} perturbations at 0.99 r_n, n in (3, 5); {dt:.2f}s"


def criterion_10():
    fields = {"exact": branch_field(P, 18, -1.0, 0.0)}
    # random magnitudes below 2^-j with random signs on the same branch
    u = keyed_uniform(10, np.arange(19))
    ent = {(1, j, (0,)): (2 * u[j] - 1) * 2.0 ** -j for j in range(19)}
    fields["random"] = CoefficientField.from_entries(1, 18, P, ent)
    ok, worst = True, 0.0
    for F in fields.values():
        P_all = np.array([partial_sum(F, HAAR, 0.0, J) for J in range(19)])
        gap = np.abs(P_all[-1] - P_all)
        ratio = gap / (2 * 2.0 ** -np.arange(19))
        worst = max(worst, float(ratio.max()))
        ok &= bool(np.all(ratio <= 1.0))
    return ok, f"max |P_Jmax - P_J| / (2 * 2^-J) = {worst:.4f} over 2 fields"


def criterion_11():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = Path(tmp) / "c.json"
        cfg.write_text(json.dumps({"kind": "saturating", "besov": {"s": 0.5, "p": 2, "q": 2, "d": 1},
                                   "jmax": 14, "seed": 11, "covering": {"max_depth": 1, "c0": 1.0}}))
        outs = []
        for r in range(2):
            o = Path(tmp) / f"f{r}.json"
            cli_main(["generate", "--config", str(cfg), "-o", str(o)])
            outs.append(o.read_bytes())
        api = [_saturating(11, 14).dumps() for _ in range(2)]
    ok = outs[0] == outs[1] and api[0] == api[1] and len(outs[0]) > 0
    return ok, f"cli runs identical: {outs[0] == outs[1]}; api runs identical: {api[0] == api[1]}; " \
               f"{len(outs[0])} bytes"


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 12)}


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n):
    ok, detail = CRITERIA[n]()
    print(record(n, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for n, fn in CRITERIA.items():
        ok, detail = fn()
        print(record(n, ok, detail), flush=True)
        failed += not ok
    sys.exit(1 if failed else 0)
