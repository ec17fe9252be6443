"""Numba kernels: per-state KKT root solves and the projected-ascent oracle.

Kept separate so the hot loops stay nopython-compatible; the public API in
`solvers` and `oracle` wraps these.
"""

import numpy as np
from numba import njit

LN2 = np.log(2.0)


@njit(cache=True)
def axis_candidate(g, c, nu, theta):
    """Solve sum_t c[t] g[t] / (1 + g[t] P / theta) = nu ln2 for P >= 0.

    The left side is strictly decreasing and convex in P, so the root is
    unique and Newton from P = 0 converges monotonically from the left.
    Returns (P, L) where L is the per-state Lagrangian value
    sum_t c[t] theta ln(1+g[t]P/theta) - nu ln2 P at the stationary
    point; L may be negative, in which case silence beats transmitting
    in this state.
    """
    target = nu * LN2
    f0 = 0.0
    for t in range(g.size):
        f0 += c[t] * g[t]
    if target <= 0.0 or f0 <= target:
        return 0.0, 0.0
    p = 0.0
    for _ in range(60):
        f = 0.0
        fp = 0.0
        for t in range(g.size):
            den = 1.0 + g[t] * p / theta
            f += c[t] * g[t] / den
            fp -= c[t] * g[t] * g[t] / (theta * den * den)
        step = (f - target) / fp
        p -= step
        if -step <= 1e-15 * p:
            break
    val = -target * p
    for t in range(g.size):
        val += c[t] * theta * np.log(1.0 + g[t] * p / theta)
    return p, val


@njit(cache=True)
def axis_candidates_all(G1, C1, G2, C2, nu1, nu2, act1, act2, theta):
    """Axis candidates and Lagrangian values for every state.

    G1/G2 hold, per state, the gains entering each fraction term of user 1/2
    with the other user silent; C1/C2 the matching coefficients.
    """
    n = G1.shape[0]
    p1 = np.zeros(n)
    l1 = np.zeros(n)
    p2 = np.zeros(n)
    l2 = np.zeros(n)
    for i in range(n):
        if act1:
            p1[i], l1[i] = axis_candidate(G1[i], C1, nu1, theta)
        if act2:
            p2[i], l2[i] = axis_candidate(G2[i], C2, nu2, theta)
    return p1, l1, p2, l2


@njit(cache=True)
def axis_select(G1, C1, G2, C2, nu1, nu2, act1, act2, theta):
    """Per-state winner selection among {user 1, user 2, silence}.

    The largest per-state Lagrangian wins; ties go to user 1 first, then
    to silence (zero power).
    """
    n = G1.shape[0]
    P1 = np.zeros(n)
    P2 = np.zeros(n)
    for i in range(n):
        c1 = 0.0
        v1 = 0.0
        c2 = 0.0
        v2 = 0.0
        if act1:
            c1, v1 = axis_candidate(G1[i], C1, nu1, theta)
        if act2:
            c2, v2 = axis_candidate(G2[i], C2, nu2, theta)
        if v1 >= v2 and v1 > 0.0:
            P1[i] = c1
        elif v2 > 0.0:
            P2[i] = c2
    return P1, P2


@njit(cache=True)
def _col_max(G, C):
    """max over states of f_k(0) = sum_t c[t] g[t]."""
    m = 0.0
    for i in range(G.shape[0]):
        s = 0.0
        for t in range(C.size):
            s += C[t] * G[i, t]
        if s > m:
            m = s
    return m


@njit(cache=True)
def _pair_budgets(G1, C1, G2, C2, nu1, nu2, act1, act2, theta, w):
    """Winner-take-all expected powers (E[p1], E[p2]) at the given duals."""
    E1 = 0.0
    E2 = 0.0
    for i in range(w.size):
        p1 = 0.0
        v1 = 0.0
        p2 = 0.0
        v2 = 0.0
        if act1:
            p1, v1 = axis_candidate(G1[i], C1, nu1, theta)
        if act2:
            p2, v2 = axis_candidate(G2[i], C2, nu2, theta)
        if v1 >= v2 and v1 > 0.0:
            E1 += w[i] * p1
        elif v2 > 0.0:
            E2 += w[i] * p2
    return E1, E2


@njit(cache=True)
def _inner_nu1(G1, C1, G2, C2, nu2, act2, theta, w, b1, tol1):
    """Water level for slot-1 meeting its budget at fixed nu2.

    Bracketing secant (Illinois) on the winner-take-all residual.  The
    residual jumps where a state is indifferent between its options; a
    budget landing inside a jump is met by notionally splitting the tied
    state, and the returned E[p2] accounts for the split so the outer
    residual stays continuous in nu2.  Returns (nu1, adjusted E[p2]).
    """
    hi = _col_max(G1, C1) / LN2 * (1.0 + 1e-12)
    E1, E2 = _pair_budgets(G1, C1, G2, C2, hi, nu2, True, act2, theta, w)
    fhi = E1 - b1
    lo = hi
    flo = fhi
    k = 0
    while flo < 0.0 and k < 200:
        lo *= 0.5
        E1, E2 = _pair_budgets(G1, C1, G2, C2, lo, nu2, True, act2, theta, w)
        flo = E1 - b1
        k += 1
    nu1 = hi
    side = 0
    for _ in range(200):
        if abs(fhi) <= tol1:
            nu1 = hi
            break
        if abs(flo) <= tol1:
            nu1 = lo
            break
        if fhi != flo:
            x = (lo * fhi - hi * flo) / (fhi - flo)
        else:
            x = 0.5 * (lo + hi)
        if not (lo < x < hi):
            x = 0.5 * (lo + hi)
        E1, E2 = _pair_budgets(G1, C1, G2, C2, x, nu2, True, act2, theta, w)
        fx = E1 - b1
        if fx > 0.0:
            lo = x
            flo = fx
            if side == 1:
                fhi *= 0.5
            side = 1
        else:
            hi = x
            fhi = fx
            if side == -1:
                flo *= 0.5
            side = -1
        nu1 = hi
        if hi - lo <= 1e-15 * hi:
            break
    # recompute at the chosen level and split ties so E[p1] = b1
    n = w.size
    E1 = 0.0
    E2 = 0.0
    vmax = 1e-300
    p1c = np.zeros(n)
    v1a = np.zeros(n)
    p2c = np.zeros(n)
    v2a = np.zeros(n)
    for i in range(n):
        p1, v1 = axis_candidate(G1[i], C1, nu1, theta)
        p2 = 0.0
        v2 = 0.0
        if act2:
            p2, v2 = axis_candidate(G2[i], C2, nu2, theta)
        p1c[i] = p1
        v1a[i] = v1
        p2c[i] = p2
        v2a[i] = v2
        if v1 >= v2 and v1 > 0.0:
            E1 += w[i] * p1
        elif v2 > 0.0:
            E2 += w[i] * p2
        if v1 > vmax:
            vmax = v1
        if v2 > vmax:
            vmax = v2
    r1 = E1 - b1
    if abs(r1) <= tol1:
        return nu1, E2
    tau = 1e-9 * vmax
    for i in range(n):
        if abs(r1) <= tol1:
            break
        if w[i] <= 0.0 or p1c[i] <= 0.0:
            continue
        won1 = v1a[i] >= v2a[i] and v1a[i] > 0.0
        alt = v2a[i] if v2a[i] > 0.0 else 0.0
        if r1 > 0.0 and won1 and v1a[i] - alt <= tau:
            move = min(r1, w[i] * p1c[i])
            mu = move / (w[i] * p1c[i])
            r1 -= move
            if v2a[i] > 0.0:
                E2 += mu * w[i] * p2c[i]
        elif r1 < 0.0 and not won1 and max(v2a[i], 0.0) - v1a[i] <= tau:
            move = min(-r1, w[i] * p1c[i])
            mu = move / (w[i] * p1c[i])
            r1 += move
            if v2a[i] > 0.0:
                E2 -= mu * w[i] * p2c[i]
    return nu1, E2


@njit(cache=True)
def calibrate_pair(G1, C1, G2, C2, w, theta, b1, b2, tol1, tol2):
    """Nested dual search meeting both budgets, both sources active.

    The inner level solves nu1 at fixed nu2 (with tie splitting, so the
    outer residual E[p2] - b2 is continuous and decreasing in nu2); the
    outer level is the same bracketing secant on nu2.  Remaining
    tie-splitting at the returned pair is the caller's job.
    """
    hi = _col_max(G2, C2) / LN2 * (1.0 + 1e-12)
    nu1, E2 = _inner_nu1(G1, C1, G2, C2, hi, True, theta, w, b1, tol1)
    fhi = E2 - b2
    lo = hi
    flo = fhi
    k = 0
    while flo < 0.0 and k < 200:
        lo *= 0.5
        nu1, E2 = _inner_nu1(G1, C1, G2, C2, lo, True, theta, w, b1, tol1)
        flo = E2 - b2
        k += 1
    nu2 = hi
    side = 0
    for _ in range(200):
        if abs(fhi) <= tol2:
            nu2 = hi
            break
        if abs(flo) <= tol2:
            nu2 = lo
            break
        if fhi != flo:
            x = (lo * fhi - hi * flo) / (fhi - flo)
        else:
            x = 0.5 * (lo + hi)
        if not (lo < x < hi):
            x = 0.5 * (lo + hi)
        nu1, E2 = _inner_nu1(G1, C1, G2, C2, x, True, theta, w, b1, tol1)
        fx = E2 - b2
        if fx > 0.0:
            lo = x
            flo = fx
            if side == 1:
                fhi *= 0.5
            side = 1
        else:
            hi = x
            fhi = fx
            if side == -1:
                flo *= 0.5
            side = -1
        nu2 = hi
        if hi - lo <= 1e-15 * hi:
            break
    nu1, _ = _inner_nu1(G1, C1, G2, C2, nu2, True, theta, w, b1, tol1)
    return nu1, nu2


@njit(cache=True)
def _solve_marginal(gj, cj, dj, gs, cs, target, theta):
    """Root of sum_j cj gj/(dj + gj P/theta) + sum_s cs gs/(1+gs P/theta) = target.

    The left side is decreasing and convex in P (dj >= 1 are the joint
    denominators frozen at the other user's power), so Newton from P = 0
    converges monotonically; returns 0 when already below target there.
    """
    f0 = 0.0
    for j in range(gj.size):
        f0 += cj[j] * gj[j] / dj[j]
    for s in range(gs.size):
        f0 += cs[s] * gs[s]
    if target <= 0.0 or f0 <= target:
        return 0.0
    p = 0.0
    for _ in range(60):
        f = 0.0
        fp = 0.0
        for j in range(gj.size):
            den = dj[j] + gj[j] * p / theta
            f += cj[j] * gj[j] / den
            fp -= cj[j] * gj[j] * gj[j] / (theta * den * den)
        for s in range(gs.size):
            den = 1.0 + gs[s] * p / theta
            f += cs[s] * gs[s] / den
            fp -= cs[s] * gs[s] * gs[s] / (theta * den * den)
        step = (f - target) / fp
        p -= step
        if -step <= 1e-15 * p:
            break
    return p


@njit(cache=True)
def coupled_state_solve(gj1, gj2, cj, gs1, cs1, gs2, cs2, nu1, nu2, act1, act2, theta):
    """Per-state KKT point when the marginal-rate functions mix joint and
    individual fractions: both users may transmit simultaneously.

    The per-state Lagrangian is strictly concave whenever an individual
    fraction has positive weight, so any KKT point is the unique optimum.
    Checks the three boundary candidates (silence, each user alone) first,
    then solves the interior stationarity system by damped 2x2 Newton.
    Returns (P1, P2).
    """
    t1 = nu1 * LN2
    t2 = nu2 * LN2
    nJ = gj1.size
    ones = np.ones(nJ)
    p1a = _solve_marginal(gj1, cj, ones, gs1, cs1, t1, theta) if act1 else 0.0
    # user 1 alone (or silence, p1a == 0): valid iff user 2's marginal there
    # does not exceed its dual price
    if act2:
        f2 = 0.0
        for j in range(nJ):
            f2 += cj[j] * gj2[j] / (1.0 + gj1[j] * p1a / theta)
        for s in range(gs2.size):
            f2 += cs2[s] * gs2[s]
        if f2 <= t2:
            return p1a, 0.0
    else:
        return p1a, 0.0
    p2a = _solve_marginal(gj2, cj, ones, gs2, cs2, t2, theta)
    if act1:
        f1 = 0.0
        for j in range(nJ):
            f1 += cj[j] * gj1[j] / (1.0 + gj2[j] * p2a / theta)
        for s in range(gs1.size):
            f1 += cs1[s] * gs1[s]
        if f1 <= t1:
            return 0.0, p2a
    else:
        return 0.0, p2a
    # interior stationary point: f1 = t1, f2 = t2
    p1 = p1a if p1a > 0.0 else 1e-12
    p2 = p2a if p2a > 0.0 else 1e-12
    ok = False
    for _ in range(80):
        f1 = 0.0
        f2 = 0.0
        j11 = 0.0
        j12 = 0.0
        j22 = 0.0
        for j in range(nJ):
            den = 1.0 + (gj1[j] * p1 + gj2[j] * p2) / theta
            f1 += cj[j] * gj1[j] / den
            f2 += cj[j] * gj2[j] / den
            j11 -= cj[j] * gj1[j] * gj1[j] / (theta * den * den)
            j12 -= cj[j] * gj1[j] * gj2[j] / (theta * den * den)
            j22 -= cj[j] * gj2[j] * gj2[j] / (theta * den * den)
        for s in range(gs1.size):
            den = 1.0 + gs1[s] * p1 / theta
            f1 += cs1[s] * gs1[s] / den
            j11 -= cs1[s] * gs1[s] * gs1[s] / (theta * den * den)
        for s in range(gs2.size):
            den = 1.0 + gs2[s] * p2 / theta
            f2 += cs2[s] * gs2[s] / den
            j22 -= cs2[s] * gs2[s] * gs2[s] / (theta * den * den)
        r1 = f1 - t1
        r2 = f2 - t2
        if abs(r1) <= 1e-13 * t1 and abs(r2) <= 1e-13 * t2:
            ok = True
            break
        det = j11 * j22 - j12 * j12
        if det == 0.0:
            break
        d1 = -(j22 * r1 - j12 * r2) / det
        d2 = -(j11 * r2 - j12 * r1) / det
        p1n = p1 + d1
        p2n = p2 + d2
        # damp rather than cross zero: the interior root has P > 0
        p1 = p1n if p1n > 0.0 else 0.1 * p1
        p2 = p2n if p2n > 0.0 else 0.1 * p2
    if not ok:
        # near-singular curvature (one fraction carrying almost all the
        # weight makes the 2x2 system close to rank one): alternate exact
        # one-dimensional solves, which converge for any strictly concave
        # per-state Lagrangian
        dj = np.empty(nJ)
        for _ in range(500):
            for j in range(nJ):
                dj[j] = 1.0 + gj2[j] * p2 / theta
            p1n = _solve_marginal(gj1, cj, dj, gs1, cs1, t1, theta)
            for j in range(nJ):
                dj[j] = 1.0 + gj1[j] * p1n / theta
            p2n = _solve_marginal(gj2, cj, dj, gs2, cs2, t2, theta)
            done = (
                abs(p1n - p1) <= 1e-14 * (p1 + 1.0)
                and abs(p2n - p2) <= 1e-14 * (p2 + 1.0)
            )
            p1 = p1n
            p2 = p2n
            if done:
                break
    return p1, p2


@njit(cache=True)
def coupled_policies(GJ1, GJ2, CJ, GS1, CS1, GS2, CS2, nu1, nu2, act1, act2, theta):
    """Per-state coupled KKT policies for the whole ensemble."""
    n = GJ1.shape[0]
    P1 = np.zeros(n)
    P2 = np.zeros(n)
    for i in range(n):
        P1[i], P2[i] = coupled_state_solve(
            GJ1[i], GJ2[i], CJ, GS1[i], CS1, GS2[i], CS2,
            nu1, nu2, act1, act2, theta,
        )
    return P1, P2


@njit(cache=True)
def _coupled_budgets(GJ1, GJ2, CJ, GS1, CS1, GS2, CS2, nu1, nu2, act1, act2, theta, w):
    E1 = 0.0
    E2 = 0.0
    for i in range(w.size):
        p1, p2 = coupled_state_solve(
            GJ1[i], GJ2[i], CJ, GS1[i], CS1, GS2[i], CS2,
            nu1, nu2, act1, act2, theta,
        )
        E1 += w[i] * p1
        E2 += w[i] * p2
    return E1, E2


@njit(cache=True)
def _coupled_f0_max(GJ, CJ, GS, CS):
    """max over states of the user's marginal at zero power."""
    m = 0.0
    for i in range(GJ.shape[0]):
        s = 0.0
        for j in range(CJ.size):
            s += CJ[j] * GJ[i, j]
        for t in range(CS.size):
            s += CS[t] * GS[i, t]
        if s > m:
            m = s
    return m


@njit(cache=True)
def _inner_nu1_coupled(
    GJ1, GJ2, CJ, GS1, CS1, GS2, CS2, nu2, act2, theta, w, b1, tol1
):
    """Water level for user 1 meeting its budget at fixed nu2 (coupled form).

    The coupled per-state optimum is unique and continuous in the duals,
    so the expected-power residual is continuous and strictly decreasing:
    plain bracketing secant, no tie machinery.  Returns (nu1, E[p2]).
    """
    hi = _coupled_f0_max(GJ1, CJ, GS1, CS1) / LN2 * (1.0 + 1e-12)
    E1, E2 = _coupled_budgets(
        GJ1, GJ2, CJ, GS1, CS1, GS2, CS2, hi, nu2, True, act2, theta, w
    )
    fhi = E1 - b1
    lo = hi
    flo = fhi
    k = 0
    while flo < 0.0 and k < 200:
        lo *= 0.5
        E1, E2 = _coupled_budgets(
            GJ1, GJ2, CJ, GS1, CS1, GS2, CS2, lo, nu2, True, act2, theta, w
        )
        flo = E1 - b1
        k += 1
    nu1 = hi
    side = 0
    for _ in range(200):
        if abs(fhi) <= tol1:
            nu1 = hi
            break
        if abs(flo) <= tol1:
            nu1 = lo
            break
        if fhi != flo:
            x = (lo * fhi - hi * flo) / (fhi - flo)
        else:
            x = 0.5 * (lo + hi)
        if not (lo < x < hi):
            x = 0.5 * (lo + hi)
        E1, E2 = _coupled_budgets(
            GJ1, GJ2, CJ, GS1, CS1, GS2, CS2, x, nu2, True, act2, theta, w
        )
        fx = E1 - b1
        if fx > 0.0:
            lo = x
            flo = fx
            if side == 1:
                fhi *= 0.5
            side = 1
        else:
            hi = x
            fhi = fx
            if side == -1:
                flo *= 0.5
            side = -1
        nu1 = hi
        if hi - lo <= 1e-15 * hi:
            break
    E1, E2 = _coupled_budgets(
        GJ1, GJ2, CJ, GS1, CS1, GS2, CS2, nu1, nu2, True, act2, theta, w
    )
    return nu1, E2


@njit(cache=True)
def calibrate_pair_coupled(GJ1, GJ2, CJ, GS1, CS1, GS2, CS2, w, theta, b1, b2, tol1, tol2):
    """Nested dual search for the coupled per-state structure."""
    hi = _coupled_f0_max(GJ2, CJ, GS2, CS2) / LN2 * (1.0 + 1e-12)
    nu1, E2 = _inner_nu1_coupled(
        GJ1, GJ2, CJ, GS1, CS1, GS2, CS2, hi, True, theta, w, b1, tol1
    )
    fhi = E2 - b2
    lo = hi
    flo = fhi
    k = 0
    while flo < 0.0 and k < 200:
        lo *= 0.5
        nu1, E2 = _inner_nu1_coupled(
            GJ1, GJ2, CJ, GS1, CS1, GS2, CS2, lo, True, theta, w, b1, tol1
        )
        flo = E2 - b2
        k += 1
    nu2 = hi
    side = 0
    for _ in range(200):
        if abs(fhi) <= tol2:
            nu2 = hi
            break
        if abs(flo) <= tol2:
            nu2 = lo
            break
        if fhi != flo:
            x = (lo * fhi - hi * flo) / (fhi - flo)
        else:
            x = 0.5 * (lo + hi)
        if not (lo < x < hi):
            x = 0.5 * (lo + hi)
        nu1, E2 = _inner_nu1_coupled(
            GJ1, GJ2, CJ, GS1, CS1, GS2, CS2, x, True, theta, w, b1, tol1
        )
        fx = E2 - b2
        if fx > 0.0:
            lo = x
            flo = fx
            if side == 1:
                fhi *= 0.5
            side = 1
        else:
            hi = x
            fhi = fx
            if side == -1:
                flo *= 0.5
            side = -1
        nu2 = hi
        if hi - lo <= 1e-15 * hi:
            break
    nu1, _ = _inner_nu1_coupled(
        GJ1, GJ2, CJ, GS1, CS1, GS2, CS2, nu2, True, theta, w, b1, tol1
    )
    return nu1, nu2


@njit(cache=True)
def _project_budget(p, w, budget):
    """Euclidean projection of p onto {p >= 0, w @ p <= budget}, in place."""
    n = p.size
    for i in range(n):
        if p[i] < 0.0:
            p[i] = 0.0
    s = 0.0
    for i in range(n):
        s += w[i] * p[i]
    if s <= budget:
        return
    hi = 0.0
    for i in range(n):
        if w[i] > 0.0 and p[i] / w[i] > hi:
            hi = p[i] / w[i]
    lo = 0.0
    for _ in range(100):
        t = 0.5 * (lo + hi)
        s = 0.0
        for i in range(n):
            v = p[i] - t * w[i]
            if v > 0.0:
                s += w[i] * v
        if s > budget:
            lo = t
        else:
            hi = t
    t = 0.5 * (lo + hi)
    for i in range(n):
        v = p[i] - t * w[i]
        p[i] = v if v > 0.0 else 0.0


@njit(cache=True)
def _objective_terms(gr1, gr2, gd1, gd2, gdr, w, theta, P1, P2, Pr):
    """The four sum-rate upper bounds, in bits per channel use."""
    n = w.size
    tb = 1.0 - theta
    t_relay = 0.0
    t_dest = 0.0
    r1r = 0.0
    r2r = 0.0
    r1d = 0.0
    r2d = 0.0
    bonus = 0.0
    for i in range(n):
        t_relay += w[i] * np.log2(1.0 + (gr1[i] * P1[i] + gr2[i] * P2[i]) / theta)
        t_dest += w[i] * np.log2(1.0 + (gd1[i] * P1[i] + gd2[i] * P2[i]) / theta)
        r1r += w[i] * np.log2(1.0 + gr1[i] * P1[i] / theta)
        r2r += w[i] * np.log2(1.0 + gr2[i] * P2[i] / theta)
        r1d += w[i] * np.log2(1.0 + gd1[i] * P1[i] / theta)
        r2d += w[i] * np.log2(1.0 + gd2[i] * P2[i] / theta)
        bonus += w[i] * np.log2(1.0 + gdr[i] * Pr[i] / tb)
    bonus *= tb
    return (
        theta * t_relay,
        theta * t_dest + bonus,
        theta * (r1r + r2d) + bonus,
        theta * (r1d + r2r) + bonus,
    )


@njit(cache=True)
def _active_gradient(gr1, gr2, gd1, gd2, gdr, w, theta, P1, P2, Pr, active):
    """Supergradient of the active min term with respect to every power."""
    n = w.size
    tb = 1.0 - theta
    g1 = np.zeros(n)
    g2 = np.zeros(n)
    gr = np.zeros(n)
    for i in range(n):
        if active == 0:
            den = 1.0 + (gr1[i] * P1[i] + gr2[i] * P2[i]) / theta
            g1[i] = w[i] * gr1[i] / (den * LN2)
            g2[i] = w[i] * gr2[i] / (den * LN2)
        elif active == 1:
            den = 1.0 + (gd1[i] * P1[i] + gd2[i] * P2[i]) / theta
            g1[i] = w[i] * gd1[i] / (den * LN2)
            g2[i] = w[i] * gd2[i] / (den * LN2)
            gr[i] = w[i] * gdr[i] / ((1.0 + gdr[i] * Pr[i] / tb) * LN2)
        elif active == 2:
            g1[i] = w[i] * gr1[i] / ((1.0 + gr1[i] * P1[i] / theta) * LN2)
            g2[i] = w[i] * gd2[i] / ((1.0 + gd2[i] * P2[i] / theta) * LN2)
            gr[i] = w[i] * gdr[i] / ((1.0 + gdr[i] * Pr[i] / tb) * LN2)
        else:
            g1[i] = w[i] * gd1[i] / ((1.0 + gd1[i] * P1[i] / theta) * LN2)
            g2[i] = w[i] * gr2[i] / ((1.0 + gr2[i] * P2[i] / theta) * LN2)
            gr[i] = w[i] * gdr[i] / ((1.0 + gdr[i] * Pr[i] / tb) * LN2)
    return g1, g2, gr


@njit(cache=True)
def subgradient_ascent(
    gr1, gr2, gd1, gd2, gdr, w, theta, b1, b2, br, iterations, step_scale
):
    """Projected supergradient ascent on the min of the four sum-rate bounds.

    Starts from the uniform feasible point P_k = budget_k and runs a
    step-halving schedule: constant step per stage, halved between stages,
    each stage restarting from the best iterate so far.  Constant-step
    ascent stalls within O(step) of the optimum, so the halvings shrink
    the residual geometrically instead of the plain 1/sqrt(T) rate.  The
    supergradient is normalized by its infinity norm so the step is a
    per-state power increment, independent of the state count and of the
    1/n scaling the expectation puts on every gradient component.
    Returns (P1, P2, Pr, best objective, final step).
    """
    n = w.size
    P1 = np.full(n, b1)
    P2 = np.full(n, b2)
    Pr = np.full(n, br)
    best1 = P1.copy()
    best2 = P2.copy()
    bestr = Pr.copy()
    terms = _objective_terms(gr1, gr2, gd1, gd2, gdr, w, theta, P1, P2, Pr)
    best_obj = min(terms)
    stages = 20
    if stages > iterations:
        stages = iterations
    per_stage = iterations // stages
    step = step_scale
    for s in range(stages):
        step = step_scale * 0.5 ** s
        P1[:] = best1
        P2[:] = best2
        Pr[:] = bestr
        for _ in range(per_stage):
            terms = _objective_terms(gr1, gr2, gd1, gd2, gdr, w, theta, P1, P2, Pr)
            obj = terms[0]
            active = 0
            for k in range(1, 4):
                if terms[k] < obj - 1e-12:
                    obj = terms[k]
                    active = k
            obj = min(terms)
            if obj > best_obj:
                best_obj = obj
                best1[:] = P1
                best2[:] = P2
                bestr[:] = Pr
            g1, g2, gr = _active_gradient(
                gr1, gr2, gd1, gd2, gdr, w, theta, P1, P2, Pr, active
            )
            gmax = 0.0
            for i in range(n):
                if abs(g1[i]) > gmax:
                    gmax = abs(g1[i])
                if abs(g2[i]) > gmax:
                    gmax = abs(g2[i])
                if abs(gr[i]) > gmax:
                    gmax = abs(gr[i])
            if gmax <= 0.0:
                break
            scale = step / gmax
            for i in range(n):
                P1[i] += scale * g1[i]
                P2[i] += scale * g2[i]
                Pr[i] += scale * gr[i]
            _project_budget(P1, w, b1)
            _project_budget(P2, w, b2)
            _project_budget(Pr, w, br)
    return best1, best2, bestr, best_obj, step
