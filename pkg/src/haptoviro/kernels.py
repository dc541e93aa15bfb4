"""Compiled inner loops for the time stepper.

These are performance plumbing only: the operators in grid.py and the reaction
functions in model.py are the reference definitions, and tests pin the kernels
against them.  fastmath stays off so repeated runs are bit-identical; the
numpy error model is needed for the divisions to vectorize.

Each stencil row is written as west cell, branch-free interior loop, east
cell, because an index clamp inside the inner loop defeats vectorization and
costs about 3x.  The wall bodies drop the face term the reference computes as
an exact zero; dropping x - 0.0 or writing 0.0 - x is bit-identical to the
clamped form.  Row clamping (js, jn) stays: a clamped row view makes the
wall-normal difference an exact zero, matching the reference's implicit
zero-flux face.  Expression shapes (operand order, association) mirror the
numpy reference implementations so both paths agree bit for bit.
"""

from __future__ import annotations

import numba
import numpy as np

# The ECM update multiplies v and the stored stencil weights by exp of a tiny
# argument every step.  Arguments under this threshold use a 6-term Taylor
# series for exp (truncation below 1e-19 relative, well under one ulp); any
# row exceeding it falls back to libm exp.
POLY_THRESHOLD = 2e-3


@numba.njit(cache=True, error_model="numpy", inline="always")
def _expm1_taylor(x):
    return x * (1.0 + x * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x * (1.0 / 120.0)))))


@numba.njit(cache=True, error_model="numpy")
def ecm_update_transformed(a, b, v, eu, ew, u_old, w_old, dt,
                           chi_u, chi_w, alpha_u, alpha_w):
    """Reconstruct the physical fields at the incoming state into u_old, w_old,
    then apply the exact matrix decay v *= exp(-(alpha_u u + alpha_w w) dt)
    and fold the matching factors into the stored weights eu = exp(chi_u v),
    ew = exp(chi_w v)."""
    ny, nx = a.shape
    big = chi_u if chi_u > chi_w else chi_w
    srow = np.empty(nx)
    svrow = np.empty(nx)
    for j in range(ny):
        for i in range(nx):
            uo = a[j, i] * eu[j, i]
            wo = b[j, i] * ew[j, i]
            u_old[j, i] = uo
            w_old[j, i] = wo
            s = (alpha_u * uo + alpha_w * wo) * dt
            srow[i] = s
            svrow[i] = s * v[j, i]
        # max accumulators staged outside the elementwise loop; see
        # fused_update on why an in-loop reduction de-vectorizes.
        m1 = 0.0
        m2 = 0.0
        for i in range(nx):
            if srow[i] > m1:
                m1 = srow[i]
            if svrow[i] > m2:
                m2 = svrow[i]
        if m1 > POLY_THRESHOLD or big * m2 > POLY_THRESHOLD:
            for i in range(nx):
                vn = v[j, i] * np.exp(-srow[i])
                v[j, i] = vn
                eu[j, i] = np.exp(chi_u * vn)
                ew[j, i] = np.exp(chi_w * vn)
        else:
            for i in range(nx):
                q = _expm1_taylor(-srow[i])
                vold = v[j, i]
                v[j, i] = vold * (1.0 + q)
                yu = chi_u * vold * q
                eu[j, i] = eu[j, i] * (1.0 + _expm1_taylor(yu))
                yw = chi_w * vold * q
                ew[j, i] = ew[j, i] * (1.0 + _expm1_taylor(yw))


@numba.njit(cache=True, error_model="numpy")
def fused_update(a, b, v, z, eu, ew, u_old, w_old, an, bn, zn, dt,
                 D_u, D_w, D_z, ihx2, ihy2,
                 mu_u, rho, chi_u, chi_w, alpha_u, alpha_w, delta_z, beta):
    """One forward-Euler update of (a, b, z) written into (an, bn, zn).

    v, eu, ew must already hold the post-decay values; u_old, w_old hold the
    pre-decay physical fields feeding the virus reaction.  Returns the global
    minimum over the three written fields so the caller can decide between
    accepting, clamping and aborting without an extra sweep.

    The minimum is staged through a per-row scratch array: a plain scalar
    min accumulator in the cell loop is a floating-point reduction LLVM only
    vectorizes under fast-math, so it would de-vectorize the whole sweep.
    """
    ny, nx = a.shape
    gmin = np.inf
    mrow = np.empty(nx)
    for j in range(ny):
        js = j - 1
        if js < 0:
            js = 0
        jn = j + 1
        if jn > ny - 1:
            jn = ny - 1
        aj = a[j]
        ajs = a[js]
        ajn = a[jn]
        bj = b[j]
        bjs = b[js]
        bjn = b[jn]
        zj = z[j]
        zjs = z[js]
        zjn = z[jn]
        vj = v[j]
        euj = eu[j]
        eujs = eu[js]
        eujn = eu[jn]
        ewj = ew[j]
        ewjs = ew[js]
        ewjn = ew[jn]
        uoj = u_old[j]
        woj = w_old[j]
        anj = an[j]
        bnj = bn[j]
        znj = zn[j]

        # west wall cell
        ac = aj[0]
        bc = bj[0]
        zc = zj[0]
        vr = vj[0]
        ec = euj[0]
        fc = ewj[0]
        mE = 0.5 * (ec + euj[1])
        mN = 0.5 * (ec + eujn[0])
        mS = 0.5 * (ec + eujs[0])
        diva = mE * (aj[1] - ac) * ihx2 \
            + (mN * (ajn[0] - ac) - mS * (ac - ajs[0])) * ihy2
        da = D_u * diva / ec
        nE = 0.5 * (fc + ewj[1])
        nN = 0.5 * (fc + ewjn[0])
        nS = 0.5 * (fc + ewjs[0])
        divb = nE * (bj[1] - bc) * ihx2 \
            + (nN * (bjn[0] - bc) - nS * (bc - bjs[0])) * ihy2
        db = D_w * divb / fc
        lapz = (zj[1] - zc) * ihx2 \
            + ((zjn[0] - zc) - (zc - zjs[0])) * ihy2
        ue = ac * ec
        we = bc * fc
        rn = alpha_u * ue + alpha_w * we
        raz = rho * ac * zc
        f = mu_u * ac * (1.0 - ue) - raz + chi_u * ac * rn * vr
        gg = raz * (ec / fc) - bc + chi_w * bc * rn * vr
        rz = beta * woj[0] - delta_z * zc - rho * uoj[0] * zc
        av = ac + dt * (da + f)
        bv = bc + dt * (db + gg)
        zv = zc + dt * (D_z * lapz + rz)
        anj[0] = av
        bnj[0] = bv
        znj[0] = zv
        mv = av if av < bv else bv
        mrow[0] = zv if zv < mv else mv

        for i in range(1, nx - 1):
            ac = aj[i]
            bc = bj[i]
            zc = zj[i]
            vr = vj[i]
            ec = euj[i]
            fc = ewj[i]
            mE = 0.5 * (ec + euj[i + 1])
            mW = 0.5 * (ec + euj[i - 1])
            mN = 0.5 * (ec + eujn[i])
            mS = 0.5 * (ec + eujs[i])
            diva = (mE * (aj[i + 1] - ac) - mW * (ac - aj[i - 1])) * ihx2 \
                + (mN * (ajn[i] - ac) - mS * (ac - ajs[i])) * ihy2
            da = D_u * diva / ec
            nE = 0.5 * (fc + ewj[i + 1])
            nW = 0.5 * (fc + ewj[i - 1])
            nN = 0.5 * (fc + ewjn[i])
            nS = 0.5 * (fc + ewjs[i])
            divb = (nE * (bj[i + 1] - bc) - nW * (bc - bj[i - 1])) * ihx2 \
                + (nN * (bjn[i] - bc) - nS * (bc - bjs[i])) * ihy2
            db = D_w * divb / fc
            lapz = ((zj[i + 1] - zc) - (zc - zj[i - 1])) * ihx2 \
                + ((zjn[i] - zc) - (zc - zjs[i])) * ihy2
            ue = ac * ec
            we = bc * fc
            rn = alpha_u * ue + alpha_w * we
            raz = rho * ac * zc
            f = mu_u * ac * (1.0 - ue) - raz + chi_u * ac * rn * vr
            gg = raz * (ec / fc) - bc + chi_w * bc * rn * vr
            rz = beta * woj[i] - delta_z * zc - rho * uoj[i] * zc
            av = ac + dt * (da + f)
            bv = bc + dt * (db + gg)
            zv = zc + dt * (D_z * lapz + rz)
            anj[i] = av
            bnj[i] = bv
            znj[i] = zv
            mv = av if av < bv else bv
            mrow[i] = zv if zv < mv else mv

        # east wall cell
        i = nx - 1
        ac = aj[i]
        bc = bj[i]
        zc = zj[i]
        vr = vj[i]
        ec = euj[i]
        fc = ewj[i]
        mW = 0.5 * (ec + euj[i - 1])
        mN = 0.5 * (ec + eujn[i])
        mS = 0.5 * (ec + eujs[i])
        diva = (0.0 - mW * (ac - aj[i - 1])) * ihx2 \
            + (mN * (ajn[i] - ac) - mS * (ac - ajs[i])) * ihy2
        da = D_u * diva / ec
        nW = 0.5 * (fc + ewj[i - 1])
        nN = 0.5 * (fc + ewjn[i])
        nS = 0.5 * (fc + ewjs[i])
        divb = (0.0 - nW * (bc - bj[i - 1])) * ihx2 \
            + (nN * (bjn[i] - bc) - nS * (bc - bjs[i])) * ihy2
        db = D_w * divb / fc
        lapz = (0.0 - (zc - zj[i - 1])) * ihx2 \
            + ((zjn[i] - zc) - (zc - zjs[i])) * ihy2
        ue = ac * ec
        we = bc * fc
        rn = alpha_u * ue + alpha_w * we
        raz = rho * ac * zc
        f = mu_u * ac * (1.0 - ue) - raz + chi_u * ac * rn * vr
        gg = raz * (ec / fc) - bc + chi_w * bc * rn * vr
        rz = beta * woj[i] - delta_z * zc - rho * uoj[i] * zc
        av = ac + dt * (da + f)
        bv = bc + dt * (db + gg)
        zv = zc + dt * (D_z * lapz + rz)
        anj[i] = av
        bnj[i] = bv
        znj[i] = zv
        mv = av if av < bv else bv
        mrow[i] = zv if zv < mv else mv

        for i in range(nx):
            if mrow[i] < gmin:
                gmin = mrow[i]
    return gmin


@numba.njit(cache=True, error_model="numpy")
def ecm_update_direct(u, w, v, dt, alpha_u, alpha_w):
    """Exact matrix decay against the physical fields, in place."""
    ny, nx = u.shape
    srow = np.empty(nx)
    for j in range(ny):
        for i in range(nx):
            srow[i] = (alpha_u * u[j, i] + alpha_w * w[j, i]) * dt
        m1 = 0.0
        for i in range(nx):
            if srow[i] > m1:
                m1 = srow[i]
        if m1 > POLY_THRESHOLD:
            for i in range(nx):
                v[j, i] = v[j, i] * np.exp(-srow[i])
        else:
            for i in range(nx):
                v[j, i] = v[j, i] * (1.0 + _expm1_taylor(-srow[i]))


@numba.njit(cache=True, error_model="numpy")
def fused_update_direct(u, w, v, z, un, wn, zn, dt,
                        D_u, D_w, D_z, xi_u, xi_w, ihx, ihy, ihx2, ihy2,
                        mu_u, rho, delta_z, beta):
    """One forward-Euler update of the physical fields with central diffusion
    and first-order upwinding for the haptotactic fluxes.  v must already
    hold the post-decay values; u, w, z are read pre-update throughout.  Wall
    faces carry zero total flux.  Returns the minimum over the written
    fields, staged through a scratch row as in fused_update."""
    ny, nx = u.shape
    gmin = np.inf
    mrow = np.empty(nx)
    for j in range(ny):
        js = j - 1
        if js < 0:
            js = 0
        jn = j + 1
        if jn > ny - 1:
            jn = ny - 1
        uj = u[j]
        ujs = u[js]
        ujn = u[jn]
        wj = w[j]
        wjs = w[js]
        wjn = w[jn]
        zj = z[j]
        zjs = z[js]
        zjn = z[jn]
        vj = v[j]
        vjs = v[js]
        vjn = v[jn]
        unj = un[j]
        wnj = wn[j]
        znj = zn[j]

        # west wall cell: west face fluxes are exact zeros and are dropped
        uc = uj[0]
        wc = wj[0]
        zc = zj[0]
        vc = vj[0]
        lapu = (uj[1] - uc) * ihx2 + ((ujn[0] - uc) - (uc - ujs[0])) * ihy2
        lapw = (wj[1] - wc) * ihx2 + ((wjn[0] - wc) - (wc - wjs[0])) * ihy2
        lapz = (zj[1] - zc) * ihx2 + ((zjn[0] - zc) - (zc - zjs[0])) * ihy2
        vE = (vj[1] - vc) * ihx
        vN = (vjn[0] - vc) * ihy
        vS = (vc - vjs[0]) * ihy
        sE = xi_u * vE
        sN = xi_u * vN
        sS = xi_u * vS
        fE = sE * (uc if sE >= 0.0 else uj[1])
        fN = sN * (uc if sN >= 0.0 else ujn[0])
        fS = sS * (ujs[0] if sS >= 0.0 else uc)
        adv_u = fE * ihx + (fN - fS) * ihy
        tE = xi_w * vE
        tN = xi_w * vN
        tS = xi_w * vS
        hE = tE * (wc if tE >= 0.0 else wj[1])
        hN = tN * (wc if tN >= 0.0 else wjn[0])
        hS = tS * (wjs[0] if tS >= 0.0 else wc)
        adv_w = hE * ihx + (hN - hS) * ihy
        ruz = rho * uc * zc
        du = D_u * lapu - adv_u + mu_u * uc * (1.0 - uc) - ruz
        dw = D_w * lapw - adv_w + ruz - wc
        dz = D_z * lapz + (beta * wc - delta_z * zc - rho * uc * zc)
        uv = uc + dt * du
        wv = wc + dt * dw
        zv = zc + dt * dz
        unj[0] = uv
        wnj[0] = wv
        znj[0] = zv
        mv = uv if uv < wv else wv
        mrow[0] = zv if zv < mv else mv

        for i in range(1, nx - 1):
            uc = uj[i]
            wc = wj[i]
            zc = zj[i]
            vc = vj[i]
            lapu = ((uj[i + 1] - uc) - (uc - uj[i - 1])) * ihx2 \
                + ((ujn[i] - uc) - (uc - ujs[i])) * ihy2
            lapw = ((wj[i + 1] - wc) - (wc - wj[i - 1])) * ihx2 \
                + ((wjn[i] - wc) - (wc - wjs[i])) * ihy2
            lapz = ((zj[i + 1] - zc) - (zc - zj[i - 1])) * ihx2 \
                + ((zjn[i] - zc) - (zc - zjs[i])) * ihy2
            vE = (vj[i + 1] - vc) * ihx
            vW = (vc - vj[i - 1]) * ihx
            vN = (vjn[i] - vc) * ihy
            vS = (vc - vjs[i]) * ihy
            sE = xi_u * vE
            sW = xi_u * vW
            sN = xi_u * vN
            sS = xi_u * vS
            fE = sE * (uc if sE >= 0.0 else uj[i + 1])
            fW = sW * (uj[i - 1] if sW >= 0.0 else uc)
            fN = sN * (uc if sN >= 0.0 else ujn[i])
            fS = sS * (ujs[i] if sS >= 0.0 else uc)
            adv_u = (fE - fW) * ihx + (fN - fS) * ihy
            tE = xi_w * vE
            tW = xi_w * vW
            tN = xi_w * vN
            tS = xi_w * vS
            hE = tE * (wc if tE >= 0.0 else wj[i + 1])
            hW = tW * (wj[i - 1] if tW >= 0.0 else wc)
            hN = tN * (wc if tN >= 0.0 else wjn[i])
            hS = tS * (wjs[i] if tS >= 0.0 else wc)
            adv_w = (hE - hW) * ihx + (hN - hS) * ihy
            ruz = rho * uc * zc
            du = D_u * lapu - adv_u + mu_u * uc * (1.0 - uc) - ruz
            dw = D_w * lapw - adv_w + ruz - wc
            dz = D_z * lapz + (beta * wc - delta_z * zc - rho * uc * zc)
            uv = uc + dt * du
            wv = wc + dt * dw
            zv = zc + dt * dz
            unj[i] = uv
            wnj[i] = wv
            znj[i] = zv
            mv = uv if uv < wv else wv
            mrow[i] = zv if zv < mv else mv

        # east wall cell
        i = nx - 1
        uc = uj[i]
        wc = wj[i]
        zc = zj[i]
        vc = vj[i]
        lapu = (0.0 - (uc - uj[i - 1])) * ihx2 \
            + ((ujn[i] - uc) - (uc - ujs[i])) * ihy2
        lapw = (0.0 - (wc - wj[i - 1])) * ihx2 \
            + ((wjn[i] - wc) - (wc - wjs[i])) * ihy2
        lapz = (0.0 - (zc - zj[i - 1])) * ihx2 \
            + ((zjn[i] - zc) - (zc - zjs[i])) * ihy2
        vW = (vc - vj[i - 1]) * ihx
        vN = (vjn[i] - vc) * ihy
        vS = (vc - vjs[i]) * ihy
        sW = xi_u * vW
        sN = xi_u * vN
        sS = xi_u * vS
        fW = sW * (uj[i - 1] if sW >= 0.0 else uc)
        fN = sN * (uc if sN >= 0.0 else ujn[i])
        fS = sS * (ujs[i] if sS >= 0.0 else uc)
        adv_u = (0.0 - fW) * ihx + (fN - fS) * ihy
        tW = xi_w * vW
        tN = xi_w * vN
        tS = xi_w * vS
        hW = tW * (wj[i - 1] if tW >= 0.0 else wc)
        hN = tN * (wc if tN >= 0.0 else wjn[i])
        hS = tS * (wjs[i] if tS >= 0.0 else wc)
        adv_w = (0.0 - hW) * ihx + (hN - hS) * ihy
        ruz = rho * uc * zc
        du = D_u * lapu - adv_u + mu_u * uc * (1.0 - uc) - ruz
        dw = D_w * lapw - adv_w + ruz - wc
        dz = D_z * lapz + (beta * wc - delta_z * zc - rho * uc * zc)
        uv = uc + dt * du
        wv = wc + dt * dw
        zv = zc + dt * dz
        unj[i] = uv
        wnj[i] = wv
        znj[i] = zv
        mv = uv if uv < wv else wv
        mrow[i] = zv if zv < mv else mv

        for i in range(nx):
            if mrow[i] < gmin:
                gmin = mrow[i]
    return gmin


@numba.njit(cache=True, error_model="numpy")
def clamp_small_negatives(an, bn, zn):
    """Zero every negative entry and return how many were touched.  The caller
    guarantees nothing lies below the clip tolerance."""
    n = 0
    fa = an.ravel()
    fb = bn.ravel()
    fz = zn.ravel()
    for i in range(fa.size):
        if fa[i] < 0.0:
            fa[i] = 0.0
            n += 1
        if fb[i] < 0.0:
            fb[i] = 0.0
            n += 1
        if fz[i] < 0.0:
            fz[i] = 0.0
            n += 1
    return n
