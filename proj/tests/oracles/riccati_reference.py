"""High-accuracy reference values for the Riccati pair (normalized convention).

Integrates the coupled (P, Pi) system backward with scipy's DOP853 at tight
tolerances. Prints values frozen in the C++ tests.
"""
import numpy as np
from scipy.integrate import solve_ivp


def rhs(model, P, Pi):
    A, Ab, C, Cb = model["A"], model["Abar"], model["C"], model["Cbar"]
    B, Bb, D, Db = model["B"], model["Bbar"], model["D"], model["Dbar"]
    Q, Qb, N, Nb = model["Q"], model["Qbar"], model["N"], model["Nbar"]
    atoms = model["atoms"]  # list of (nu, E, Ebar, F, Fbar)
    lin = P @ A + A.T @ P + C.T @ P @ C + Q
    S = P @ B + C.T @ P @ D
    sig0 = N + D.T @ P @ D
    for nu, E, _, F, _ in atoms:
        lin += nu * E.T @ P @ E
        S += nu * E.T @ P @ F
        sig0 += nu * F.T @ P @ F
    dP = lin - S @ np.linalg.solve(sig0, S.T)
    As, Bs, Cs, Ds = A + Ab, B + Bb, C + Cb, D + Db
    lin = Pi @ As + As.T @ Pi + Cs.T @ P @ Cs + Q + Qb
    S = Pi @ Bs + Cs.T @ P @ Ds
    sig1 = N + Nb + Ds.T @ P @ Ds
    for nu, E, Eb, F, Fb in atoms:
        Es, Fs = E + Eb, F + Fb
        lin += nu * Es.T @ P @ Es
        S += nu * Es.T @ P @ Fs
        sig1 += nu * Fs.T @ P @ Fs
    dPi = lin - S @ np.linalg.solve(sig1, S.T)
    return dP, dPi


def solve(model, T):
    n = model["A"].shape[0]

    def f(tau, y):  # tau = T - t
        P = y[: n * n].reshape(n, n)
        Pi = y[n * n:].reshape(n, n)
        dP, dPi = rhs(model, P, Pi)
        return np.concatenate([dP.ravel(), dPi.ravel()])

    y0 = np.concatenate([model["G"].ravel(), (model["G"] + model["Gbar"]).ravel()])
    sol = solve_ivp(f, (0.0, T), y0, method="DOP853", rtol=1e-13, atol=1e-14)
    y = sol.y[:, -1]
    return y[: n * n].reshape(n, n), y[n * n:].reshape(n, n)


def scalar_model(**kw):
    z = np.zeros((1, 1))
    m = {k: z.copy() for k in ["A", "Abar", "C", "Cbar", "B", "Bbar", "D", "Dbar", "Q", "Qbar",
                               "N", "Nbar", "G", "Gbar"]}
    m["atoms"] = []
    for k, v in kw.items():
        if k == "atoms":
            m[k] = [tuple(np.array([[x]]) if i else x for i, x in enumerate(a)) for a in v]
        else:
            m[k] = np.array([[v]])
    return m


def mixed_model():
    A = np.array([[0.1, 0.3], [-0.2, 0.0]])
    Ab = np.array([[0.2, 0.0], [0.1, -0.1]])
    C = np.array([[0.2, 0.0], [0.0, 0.1]])
    Cb = np.array([[0.1, 0.1], [0.0, 0.0]])
    E = np.array([[0.3, 0.0], [0.1, 0.2]])
    Eb = np.array([[0.0, 0.1], [0.0, 0.1]])
    B = np.array([[1.0], [0.5]])
    Bb = np.array([[0.2], [0.0]])
    D = np.array([[0.1], [0.0]])
    Db = np.array([[0.0], [0.1]])
    F = np.array([[0.2], [0.1]])
    Fb = np.array([[0.0], [0.1]])
    Q = np.array([[1.0, 0.2], [0.2, 0.5]])
    Qb = np.array([[0.3, 0.0], [0.0, -0.2]])
    G = np.array([[0.5, 0.0], [0.0, 0.5]])
    Gb = np.array([[0.2, 0.1], [0.1, 0.2]])
    return {"A": A, "Abar": Ab, "C": C, "Cbar": Cb, "B": B, "Bbar": Bb, "D": D, "Dbar": Db,
            "Q": Q, "Qbar": Qb, "N": np.array([[1.0]]), "Nbar": np.array([[0.4]]), "G": G,
            "Gbar": Gb, "atoms": [(1.5, E, Eb, F, Fb)]}


if __name__ == "__main__":
    np.set_printoptions(precision=17)
    P, Pi = solve(scalar_model(B=1, N=1, Q=1), 1.0)
    print("tanh P(0)", repr(P[0, 0]), "tanh(1)", repr(np.tanh(1.0)))
    P, Pi = solve(scalar_model(Abar=1, B=0.5, Bbar=0.5, Q=0.5, Qbar=0.5, N=1, G=0.5, Gbar=0.5), 1.0)
    print("mean_field Nbar=0: P(0)", repr(P[0, 0]), "Pi(0)", repr(Pi[0, 0]))
    P, Pi = solve(scalar_model(B=1, N=1, Q=1, G=1, atoms=[(1.0, 0.5, 0.0, 0.3, 0.0)]), 1.0)
    print("jump_only: P(0)", repr(P[0, 0]), "Pi(0)", repr(Pi[0, 0]))
    P, Pi = solve(scalar_model(B=1, N=1, Q=1, Cbar=0.5, atoms=[(1.0, 0.0, 0.5, 0.0, 0.0)]), 1.0)
    print("tanh with bar noise: P(0)", repr(P[0, 0]), "Pi(0)", repr(Pi[0, 0]))
    P, Pi = solve(mixed_model(), 0.5)
    print("mixed P(0)", P.tolist())
    print("mixed Pi(0)", Pi.tolist())
    x0 = np.array([1.0, -0.5])
    print("mixed value", repr(x0 @ Pi @ x0))
