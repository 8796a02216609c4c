"""Compiled fixed-step RK4 loops for the long-horizon experiments.

These are performance twins of the pure-numpy reference dynamics in
``subspace``/``learner``/``distributed``/``sysid``: identical equations,
identical stage structure, identical per-step re-symmetrization, compiled
with numba so that 1 ms steps over minute-long horizons stay inside the
experiment runtime budgets.  Equivalence against the numpy path is covered
by tests; the kernels are driven exclusively through
``experiments.run_estimator`` / ``experiments.run_network``.

State layouts (flat vectors, node-major blocks):

single estimator with an analytic regressor
    [Q(n^2), Pbar(n^2), P(n^2), theta_d(n), varphi(n), Omega(n^2)]

plant network (N nodes, plant order nF, regression dimension n)
    [X(N nF), r_u(N nF), r_y(N nF), r_c(N nF),
     Q(N n^2), Pbar(N n^2), P(N n^2),
     theta_d(N n), varphi(N n), Omega(N n^2), theta_u(N n),
     OmPsi(N dmax^2), ref_u(qsum)]

The trailing two blocks integrate, when enabled, the per-node reduced
information inverses and the consensus reference system used by the
distributed-convergence diagnostics; they are fed by fixed certificate
bases and never feed back into the estimators.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _sym(M):
    n = M.shape[0]
    for a in range(n):
        for c in range(a + 1, n):
            v = 0.5 * (M[a, c] + M[c, a])
            M[a, c] = v
            M[c, a] = v


@njit(cache=True)
def _estimator_rhs(
    t, phi, z, Q, Pb, P, NN, thd, vphi, Om,
    alpha, beta, gamma, kappa,
    dQ, dPb, dP, dthd, dvphi, dOm,
):
    """Writes the derivative blocks of one estimator given (phi, z) at t.

    dQ = -beta Q + phi phi'
    dPbar = -gamma Pbar + NuNu'
    dP = -gamma P + gamma I - gamma^2 Pbar
    dtheta_d = -Omega (R theta_d - z P phi - dP varphi)
    dvarphi = -beta varphi + z phi
    dOmega = beta Omega - Omega R Omega
    R = P phi phi' P + kappa beta (I - P) + dP Q P + P Q dP
        + (alpha e^{-beta t} - kappa) dP
    """
    n = Q.shape[0]
    for a in range(n):
        for c in range(n):
            dQ[a, c] = -beta * Q[a, c] + phi[a] * phi[c]
            dPb[a, c] = -gamma * Pb[a, c] + NN[a, c]
            dP[a, c] = -gamma * P[a, c] - gamma * gamma * Pb[a, c]
        dP[a, a] += gamma
    Pphi = P @ phi
    PdQP = (dP @ Q) @ P
    coef = alpha * np.exp(-beta * t) - kappa
    R = np.empty((n, n))
    for a in range(n):
        for c in range(n):
            R[a, c] = (
                Pphi[a] * Pphi[c]
                - kappa * beta * P[a, c]
                + PdQP[a, c]
                + PdQP[c, a]
                + coef * dP[a, c]
            )
        R[a, a] += kappa * beta
    dthd[:] = -(Om @ (R @ thd - z * Pphi - dP @ vphi))
    for a in range(n):
        dvphi[a] = -beta * vphi[a] + z * phi[a]
    dOm[:] = beta * Om - (Om @ R) @ Om


@njit(cache=True)
def _sin_rhs(t, y, dy, amps, freqs, phases, theta, eps, NN, alpha, beta, gamma, kappa):
    n = NN.shape[0]
    o = 0
    Q = y[o : o + n * n].reshape(n, n)
    dQ = dy[o : o + n * n].reshape(n, n)
    o += n * n
    Pb = y[o : o + n * n].reshape(n, n)
    dPb = dy[o : o + n * n].reshape(n, n)
    o += n * n
    P = y[o : o + n * n].reshape(n, n)
    dP = dy[o : o + n * n].reshape(n, n)
    o += n * n
    thd = y[o : o + n]
    dthd = dy[o : o + n]
    o += n
    vphi = y[o : o + n]
    dvphi = dy[o : o + n]
    o += n
    Om = y[o : o + n * n].reshape(n, n)
    dOm = dy[o : o + n * n].reshape(n, n)

    phi = np.zeros(n)
    for c in range(n):
        for j in range(amps.shape[1]):
            phi[c] += amps[c, j] * np.sin(freqs[c, j] * t + phases[c, j])
    z = phi @ theta + eps
    _estimator_rhs(
        t, phi, z, Q, Pb, P, NN, thd, vphi, Om,
        alpha, beta, gamma, kappa, dQ, dPb, dP, dthd, dvphi, dOm,
    )


@njit(cache=True)
def sin_segment(
    y, t0, h, nsteps, step0,
    amps, freqs, phases, theta, eps_seq,
    NN, alpha, beta, gamma, kappa,
    rec, stride,
):
    """Integrate the analytic-regressor estimator over one hold segment
    (held kernel basis NN), recording every stride-th global step."""
    m = y.shape[0]
    n = NN.shape[0]
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    yt = np.empty(m)
    for s in range(nsteps):
        t = t0 + s * h
        e = eps_seq[s]
        _sin_rhs(t, y, k1, amps, freqs, phases, theta, e, NN, alpha, beta, gamma, kappa)
        for j in range(m):
            yt[j] = y[j] + 0.5 * h * k1[j]
        _sin_rhs(t + 0.5 * h, yt, k2, amps, freqs, phases, theta, e, NN, alpha, beta, gamma, kappa)
        for j in range(m):
            yt[j] = y[j] + 0.5 * h * k2[j]
        _sin_rhs(t + 0.5 * h, yt, k3, amps, freqs, phases, theta, e, NN, alpha, beta, gamma, kappa)
        for j in range(m):
            yt[j] = y[j] + h * k3[j]
        _sin_rhs(t + h, yt, k4, amps, freqs, phases, theta, e, NN, alpha, beta, gamma, kappa)
        for j in range(m):
            y[j] += (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        _sym(y[0 : n * n].reshape(n, n))
        _sym(y[n * n : 2 * n * n].reshape(n, n))
        _sym(y[2 * n * n : 3 * n * n].reshape(n, n))
        _sym(y[3 * n * n + 2 * n : 4 * n * n + 2 * n].reshape(n, n))
        g = step0 + s + 1
        if g % stride == 0:
            rec[g // stride] = y


@njit(cache=True)
def _net_rhs(
    t, y, dy,
    F, b, g_vec, W, wvec, C, Lcomm,
    in_amps, in_freqs, in_phases, eps,
    NNs, alpha, beta, gamma, kappa, eta_d, eta_u,
    ref_on, Nd_pad, dims, Nu_pad, qs, theta, dmax, qsum,
):
    N = C.shape[0]
    nF = F.shape[0]
    n = NNs.shape[1]
    o = 0
    X = y[o : o + N * nF].reshape(N, nF)
    dX = dy[o : o + N * nF].reshape(N, nF)
    o += N * nF
    Ru = y[o : o + N * nF].reshape(N, nF)
    dRu = dy[o : o + N * nF].reshape(N, nF)
    o += N * nF
    Ry = y[o : o + N * nF].reshape(N, nF)
    dRy = dy[o : o + N * nF].reshape(N, nF)
    o += N * nF
    Rc = y[o : o + N * nF].reshape(N, nF)
    dRc = dy[o : o + N * nF].reshape(N, nF)
    o += N * nF
    Q = y[o : o + N * n * n].reshape(N, n, n)
    dQ = dy[o : o + N * n * n].reshape(N, n, n)
    o += N * n * n
    Pb = y[o : o + N * n * n].reshape(N, n, n)
    dPb = dy[o : o + N * n * n].reshape(N, n, n)
    o += N * n * n
    P = y[o : o + N * n * n].reshape(N, n, n)
    dP = dy[o : o + N * n * n].reshape(N, n, n)
    o += N * n * n
    thd = y[o : o + N * n].reshape(N, n)
    dthd = dy[o : o + N * n].reshape(N, n)
    o += N * n
    vphi = y[o : o + N * n].reshape(N, n)
    dvphi = dy[o : o + N * n].reshape(N, n)
    o += N * n
    Om = y[o : o + N * n * n].reshape(N, n, n)
    dOm = dy[o : o + N * n * n].reshape(N, n, n)
    o += N * n * n
    thu = y[o : o + N * n].reshape(N, n)
    dthu = dy[o : o + N * n].reshape(N, n)
    o += N * n
    OmPsi = y[o : o + N * dmax * dmax].reshape(N, dmax, dmax)
    dOmPsi = dy[o : o + N * dmax * dmax].reshape(N, dmax, dmax)
    o += N * dmax * dmax
    tu_ref = y[o : o + qsum]
    dtu_ref = dy[o : o + qsum]

    # padded / disabled diagnostic blocks still need defined derivatives
    for i in range(N):
        for a in range(dmax):
            for c in range(dmax):
                dOmPsi[i, a, c] = 0.0
    for a in range(qsum):
        dtu_ref[a] = 0.0

    # measured outputs (per-step-held noise) and measured coupling sums
    ym = np.empty(N)
    y_true = np.empty(N)
    for i in range(N):
        y_true[i] = X[i, 0]
        ym[i] = X[i, 0] + eps[i]
    yc_meas = C @ ym
    yc_true = C @ y_true

    theta_i = np.empty((N, n))
    for i in range(N):
        u = 0.0
        for j in range(in_amps.shape[1]):
            u += in_amps[i, j] * np.sin(in_freqs[i, j] * t + in_phases[i, j])
        # plant couples through true outputs; estimator filters see measurements
        dX[i] = F @ X[i] + b * u + g_vec * yc_true[i]
        dRu[i] = W.T @ Ru[i]
        dRu[i, 0] += u
        dRy[i] = W.T @ Ry[i]
        dRy[i, 0] += ym[i]
        dRc[i] = W.T @ Rc[i]
        dRc[i, 0] += yc_meas[i]
        phi = np.empty(n)
        for c in range(nF):
            phi[c] = Ru[i, c]
            phi[nF + c] = Ry[i, c]
            if n == 3 * nF:
                phi[2 * nF + c] = Rc[i, c]
        z = ym[i] + Ry[i] @ wvec
        _estimator_rhs(
            t, phi, z, Q[i], Pb[i], P[i], NNs[i], thd[i], vphi[i], Om[i],
            alpha[i], beta[i], gamma[i], kappa[i],
            dQ[i], dPb[i], dP[i], dthd[i], dvphi[i], dOm[i],
        )
        theta_i[i] = P[i] @ thd[i] + thu[i] - P[i] @ thu[i]
        if ref_on:
            # reduced information inverse: dOmPsi = beta OmPsi - (OmPsi v)(OmPsi v)'
            # with v = N_id' phi (the reduced regressor sample)
            d = dims[i]
            v = np.zeros(d)
            for a in range(d):
                acc = 0.0
                for c in range(n):
                    acc += Nd_pad[i, c, a] * phi[c]
                v[a] = acc
            Ov = np.zeros(d)
            for a in range(d):
                acc = 0.0
                for c in range(d):
                    acc += OmPsi[i, a, c] * v[c]
                Ov[a] = acc
            for a in range(d):
                for c in range(d):
                    dOmPsi[i, a, c] = beta[i] * OmPsi[i, a, c] - Ov[a] * Ov[c]

    # consensus updates (communication Laplacian rows)
    cons = Lcomm @ theta_i
    for i in range(N):
        Pc = P[i] @ cons[i]
        dthu[i] = -eta_d[i] * (P[i] @ thu[i]) - eta_u[i] * (cons[i] - Pc)

    if ref_on:
        # stacked reference: v_j = N_ju tu_ref_j + N_jd (OmPsi_j N_jd' vphi_j - N_jd' theta)
        vstack = np.zeros((N, n))
        off = 0
        for j in range(N):
            d = dims[j]
            qj = qs[j]
            s = np.zeros(d)
            for a in range(d):
                acc = 0.0
                for c in range(n):
                    acc += Nd_pad[j, c, a] * vphi[j, c]
                s[a] = acc
            xs = np.zeros(d)
            for a in range(d):
                acc = 0.0
                for c in range(d):
                    acc += OmPsi[j, a, c] * s[c]
                thj = 0.0
                for c in range(n):
                    thj += Nd_pad[j, c, a] * theta[c]
                xs[a] = acc - thj
            for c in range(n):
                acc = 0.0
                for a in range(d):
                    acc += Nd_pad[j, c, a] * xs[a]
                for a in range(qj):
                    acc += Nu_pad[j, c, a] * tu_ref[off + a]
                vstack[j, c] = acc
            off += qj
        off = 0
        for i in range(N):
            qi = qs[i]
            for a in range(qi):
                acc = 0.0
                for j in range(N):
                    lij = Lcomm[i, j]
                    if lij != 0.0:
                        dot = 0.0
                        for c in range(n):
                            dot += Nu_pad[i, c, a] * vstack[j, c]
                        acc += lij * dot
                dtu_ref[off + a] = -eta_u[i] * acc
            off += qi


@njit(cache=True)
def net_segment(
    y, t0, h, nsteps, step0,
    F, b, g_vec, W, wvec, C, Lcomm,
    in_amps, in_freqs, in_phases, eps_seq,
    NNs, alpha, beta, gamma, kappa, eta_d, eta_u,
    ref_on, Nd_pad, dims, Nu_pad, qs, theta, dmax, qsum,
    rec, stride,
):
    """Integrate the coupled plant/estimator network over one hold segment."""
    m = y.shape[0]
    N = C.shape[0]
    nF = F.shape[0]
    n = NNs.shape[1]
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    yt = np.empty(m)
    o_mat = 4 * N * nF
    o_om = o_mat + 3 * N * n * n + 2 * N * n
    o_ompsi = o_om + N * n * n + N * n
    for s in range(nsteps):
        t = t0 + s * h
        e = eps_seq[s]
        _net_rhs(t, y, k1, F, b, g_vec, W, wvec, C, Lcomm, in_amps, in_freqs, in_phases, e,
                 NNs, alpha, beta, gamma, kappa, eta_d, eta_u,
                 ref_on, Nd_pad, dims, Nu_pad, qs, theta, dmax, qsum)
        for j in range(m):
            yt[j] = y[j] + 0.5 * h * k1[j]
        _net_rhs(t + 0.5 * h, yt, k2, F, b, g_vec, W, wvec, C, Lcomm, in_amps, in_freqs, in_phases, e,
                 NNs, alpha, beta, gamma, kappa, eta_d, eta_u,
                 ref_on, Nd_pad, dims, Nu_pad, qs, theta, dmax, qsum)
        for j in range(m):
            yt[j] = y[j] + 0.5 * h * k2[j]
        _net_rhs(t + 0.5 * h, yt, k3, F, b, g_vec, W, wvec, C, Lcomm, in_amps, in_freqs, in_phases, e,
                 NNs, alpha, beta, gamma, kappa, eta_d, eta_u,
                 ref_on, Nd_pad, dims, Nu_pad, qs, theta, dmax, qsum)
        for j in range(m):
            yt[j] = y[j] + h * k3[j]
        _net_rhs(t + h, yt, k4, F, b, g_vec, W, wvec, C, Lcomm, in_amps, in_freqs, in_phases, e,
                 NNs, alpha, beta, gamma, kappa, eta_d, eta_u,
                 ref_on, Nd_pad, dims, Nu_pad, qs, theta, dmax, qsum)
        for j in range(m):
            y[j] += (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        for i in range(N):
            _sym(y[o_mat + i * n * n : o_mat + (i + 1) * n * n].reshape(n, n))
            _sym(y[o_mat + (N + i) * n * n : o_mat + (N + i + 1) * n * n].reshape(n, n))
            _sym(y[o_mat + (2 * N + i) * n * n : o_mat + (2 * N + i + 1) * n * n].reshape(n, n))
            _sym(y[o_om + i * n * n : o_om + (i + 1) * n * n].reshape(n, n))
            if ref_on:
                _sym(y[o_ompsi + i * dmax * dmax : o_ompsi + (i + 1) * dmax * dmax].reshape(dmax, dmax))
        g = step0 + s + 1
        if g % stride == 0:
            rec[g // stride] = y
