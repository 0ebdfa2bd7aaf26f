"""Hot inner loops: single-site Metropolis sweeps and permutation sums.

All kernels are compiled with numba unless ``MARCINCLT_NO_NUMBA=1`` is set
(see :mod:`marcinclt._accel`).  They consume pre-drawn random arrays so that
the compiled and fallback paths produce bit-identical output, and they mutate
state in place.  Neighbor structure is CSR-style: ``nbr[indptr[i]:indptr[i+1]]``
are the neighbors of site ``i`` and the parallel ``j*`` arrays carry the
coupling of the corresponding edge, duplicated for both directions.
"""

import numpy as np

from ._accel import njit


@njit(cache=True, nogil=True)
def ising_metropolis_chunk(spins, total, indptr, nbr, jn, h, beta,
                           sites, accept, record_every, out, out_off):
    """Run len(sites) spin-flip updates; record the running total spin.

    Returns the updated total.  ``out[out_off + k]`` receives the total after
    every ``record_every`` updates (no records when record_every <= 0).
    """
    k = 0
    cnt = 0
    for t in range(sites.shape[0]):
        i = sites[t]
        s = spins[i]
        loc = h[i]
        for p in range(indptr[i], indptr[i + 1]):
            loc += jn[p] * spins[nbr[p]]
        d_h = 2.0 * s * loc
        if d_h <= 0.0 or accept[t] < np.exp(-beta * d_h):
            spins[i] = -s
            total += -2.0 * s
        if record_every > 0:
            cnt += 1
            if cnt == record_every:
                out[out_off + k] = total
                k += 1
                cnt = 0
    return total


@njit(cache=True, nogil=True)
def xy_metropolis_chunk(cs, sn, total, indptr, nbr, j1, j2, h1, h2, beta,
                        sites, dcos, dsin, accept, record_every, out, out_off):
    """Angle-perturbation updates for unit-circle spins.

    ``cs``/``sn`` hold cos/sin of the site angles; ``total`` tracks the first
    component sum.  ``dcos``/``dsin`` are cos/sin of the proposed angle
    increments, precomputed by the caller so the compiled and fallback paths
    share one trig implementation and stay bit-identical.
    """
    k = 0
    cnt = 0
    for t in range(sites.shape[0]):
        i = sites[t]
        c_old = cs[i]
        s_old = sn[i]
        dc = dcos[t]
        ds = dsin[t]
        c_new = c_old * dc - s_old * ds
        s_new = s_old * dc + c_old * ds
        e1 = h1[i]
        e2 = h2[i]
        for p in range(indptr[i], indptr[i + 1]):
            e1 += j1[p] * cs[nbr[p]]
            e2 += j2[p] * sn[nbr[p]]
        d_h = -((c_new - c_old) * e1 + (s_new - s_old) * e2)
        if d_h <= 0.0 or accept[t] < np.exp(-beta * d_h):
            cs[i] = c_new
            sn[i] = s_new
            total += c_new - c_old
        if record_every > 0:
            cnt += 1
            if cnt == record_every:
                out[out_off + k] = total
                k += 1
                cnt = 0
    return total


@njit(cache=True, nogil=True)
def sphere_metropolis_chunk(sp, total, indptr, nbr, j1, j2, j3, h1, h2, h3,
                            beta, sites, cospsi, coschi, sinchi, accept,
                            record_every, out, out_off):
    """Small-cap rotation updates for unit-sphere spins (sp has shape (n,3)).

    The proposal is uniform on the spherical cap around the current
    direction: ``cospsi[t]`` is the cosine of the polar offset,
    ``coschi``/``sinchi`` the azimuth direction in the tangent frame
    (trig precomputed by the caller; the kernel itself only needs sqrt,
    which is correctly rounded, keeping both execution paths bit-identical).
    """
    k = 0
    cnt = 0
    for t in range(sites.shape[0]):
        i = sites[t]
        vx = sp[i, 0]
        vy = sp[i, 1]
        vz = sp[i, 2]
        # tangent frame (ux,uy,uz), (wx,wy,wz) orthogonal to v
        if abs(vz) < 0.9:
            # u = normalize(z x v)
            nrm = np.sqrt(vx * vx + vy * vy)
            ux = -vy / nrm
            uy = vx / nrm
            uz = 0.0
        else:
            # u = normalize(x x v)
            nrm = np.sqrt(vy * vy + vz * vz)
            ux = 0.0
            uy = -vz / nrm
            uz = vy / nrm
        wx = vy * uz - vz * uy
        wy = vz * ux - vx * uz
        wz = vx * uy - vy * ux
        cp = cospsi[t]
        sp_t = np.sqrt(max(1.0 - cp * cp, 0.0))
        cc = coschi[t]
        sc = sinchi[t]
        nx = sp_t * cc * ux + sp_t * sc * wx + cp * vx
        ny = sp_t * cc * uy + sp_t * sc * wy + cp * vy
        nz = sp_t * cc * uz + sp_t * sc * wz + cp * vz
        e1 = h1[i]
        e2 = h2[i]
        e3 = h3[i]
        for p in range(indptr[i], indptr[i + 1]):
            q = nbr[p]
            e1 += j1[p] * sp[q, 0]
            e2 += j2[p] * sp[q, 1]
            e3 += j3[p] * sp[q, 2]
        d_h = -((nx - vx) * e1 + (ny - vy) * e2 + (nz - vz) * e3)
        if d_h <= 0.0 or accept[t] < np.exp(-beta * d_h):
            sp[i, 0] = nx
            sp[i, 1] = ny
            sp[i, 2] = nz
            total += nx - vx
        if record_every > 0:
            cnt += 1
            if cnt == record_every:
                out[out_off + k] = total
                k += 1
                cnt = 0
    return total


@njit(cache=True, nogil=True)
def atomic_metropolis_chunk(idx, vals, total, atoms, logw, indptr, nbr, jn, h,
                            beta, sites, prop_idx, accept,
                            record_every, out, out_off):
    """Uniform-atom-proposal updates for a general finite single-spin measure.

    ``idx[i]``/``vals[i]`` hold the current atom index and value at site i;
    ``prop_idx[t]`` indexes the proposed atom.  Non-uniform atom weights enter
    the acceptance ratio through ``logw``.
    """
    k = 0
    cnt = 0
    for t in range(sites.shape[0]):
        i = sites[t]
        j_new = prop_idx[t]
        s_old = vals[i]
        s_new = atoms[j_new]
        loc = h[i]
        for p in range(indptr[i], indptr[i + 1]):
            loc += jn[p] * vals[nbr[p]]
        log_ratio = -beta * (-(s_new - s_old) * loc) + logw[j_new] - logw[idx[i]]
        if log_ratio >= 0.0 or accept[t] < np.exp(log_ratio):
            idx[i] = j_new
            vals[i] = s_new
            total += s_new - s_old
        if record_every > 0:
            cnt += 1
            if cnt == record_every:
                out[out_off + k] = total
                k += 1
                cnt = 0
    return total


@njit(cache=True, nogil=True)
def alpha_det_perm_sum(a, alpha):
    """Sum over all permutations of alpha^(n - #cycles) * prod a[i, perm[i]].

    Heap's algorithm enumerates permutations in place; cycles are counted per
    permutation.  ``a`` must be complex128; cost is O(n! * n).
    """
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    perm = np.arange(n)
    counters = np.zeros(n, dtype=np.int64)
    visited = np.zeros(n, dtype=np.uint8)

    total = 0.0 + 0.0j
    while True:
        prod = 1.0 + 0.0j
        for r in range(n):
            prod *= a[r, perm[r]]
        for r in range(n):
            visited[r] = 0
        ncyc = 0
        for r in range(n):
            if visited[r] == 0:
                ncyc += 1
                q = r
                while visited[q] == 0:
                    visited[q] = 1
                    q = perm[q]
        total += prod * alpha ** (n - ncyc)

        # advance to the next permutation (Heap's algorithm, iterative)
        i = 0
        while i < n:
            if counters[i] < i:
                if i % 2 == 0:
                    tmp = perm[0]
                    perm[0] = perm[i]
                    perm[i] = tmp
                else:
                    tmp = perm[counters[i]]
                    perm[counters[i]] = perm[i]
                    perm[i] = tmp
                counters[i] += 1
                break
            counters[i] = 0
            i += 1
        if i == n:
            return total
