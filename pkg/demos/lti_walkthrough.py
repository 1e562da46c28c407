"""Step-by-step design for a small time-invariant plant.

    x' = [[-1, 0], [1, -2]] x + [1, 0]^T w,    y = x

Prints the auxiliary pair, the steady Riccati solution, the observer
matrices and the error decay rate against the slowest eigenvalue of N.

    python3 demos/lti_walkthrough.py
"""

import numpy as np
import scipy.linalg as la

from strongobs.scenarios import make_scenario, run_design, run_simulation


def main():
    np.set_printoptions(precision=5, suppress=True)
    scn = make_scenario(builtin="lti-2state")
    out = run_design(scn)
    aux, v, obs = out.aux, out.verdict, out.observer
    print("Atilde =\n", aux.Atilde.eval(0.0))
    print("Ctilde =\n", aux.Ctilde.eval(0.0))
    print(f"detectability: {v.status}, PBH agrees: {v.pbh_agrees}")

    P = v.solution.P.values[-1]
    At, Ct = aux.Atilde.eval(0.0), aux.Ctilde.eval(0.0)
    n = At.shape[0]
    # algebraic Riccati equation of the dual control problem
    P_are = la.solve_continuous_are(At.T, Ct.T, np.eye(n), np.eye(Ct.shape[0]))
    print("P(T) =\n", P)
    print(f"||P(T) - P_are|| = {np.linalg.norm(P - P_are):.2e}")

    N, R, S = (getattr(obs, k).values[-1] for k in ("N", "R", "S"))
    print("N =\n", N)
    print("R =\n", R)
    print("S =\n", S)
    slow = -np.max(np.linalg.eigvals(N).real)

    res = run_simulation(scn, obs, input_profile="sin")
    print(f"decay fit mu_hat = {res.fit.mu_hat:.4f} 1/s, "
          f"slowest mode of N: {slow:.4f} 1/s")


if __name__ == "__main__":
    main()
