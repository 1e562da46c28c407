"""Systems whose auxiliary pair is not detectable.

Both plants have a bounded, exponentially stable-looking drift, yet the
filter Riccati solution grows without bound, so no strong observer exists.
For the scalar case the exact solution with P(0) = 1, Q = 1 is
P(t) = (t + 1) / 3 + (2 / 3) / (t + 1)^2, which the integrator tracks.

    python3 demos/counterexamples.py
"""

import numpy as np

from strongobs.exceptions import SynthesisUnavailableError
from strongobs.observer import synthesize
from strongobs.scenarios import analyze, make_scenario


def exact_scalar(t):
    return (t + 1) / 3 + (2 / 3) / (t + 1) ** 2


def main():
    for name in ("counterexample-scalar", "counterexample-2state"):
        scn = make_scenario(builtin=name)
        aux, v = analyze(scn)
        sol = v.solution
        print(f"{name}: {v.status} ({sol.verdict})")
        print(f"  {v.reason}")
        ts = scn.grid.times
        for t in (ts[0] + 50, ts[0] + 100, ts[-1]):
            k = int(round((t - scn.grid.t_start) / scn.grid.step))
            print(f"  t = {t:6.1f}  sigma_max(P) = {sol.sigma_max[k]:.6g}")
        try:
            synthesize(scn.system, aux, sol)
        except SynthesisUnavailableError as exc:
            print(f"  synthesis refused: {exc}")

    scn = make_scenario(builtin="counterexample-scalar")
    _, v = analyze(scn)
    ts = scn.grid.times
    err = np.max(np.abs(v.solution.P.values[:, 0, 0] - exact_scalar(ts)))
    print(f"scalar case, max |P - exact| over [0, 200]: {err:.2e}")
    # linear growth: 1e6 would take about 3e6 s
    print(f"time for the exact solution to reach 1e6: {3e6 - 1:.3g} s")


if __name__ == "__main__":
    main()
