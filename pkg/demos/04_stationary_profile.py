"""Inhomogeneous stationary measures of the destruction dynamics.

The site fugacities of a stationary product measure solve a discrete
balance system: geometric-plus-constant on each side of the origin, with
a jump condition carrying the destruction rate.  For the totally
asymmetric case (p = 1) the solution is a clean two-level profile,
m = (1 + alpha N^beta) m_plus left of the origin and m_plus to the right.

The script builds that profile, samples it, runs the dynamics and checks
that the time-averaged jump rate per site stays on the profile.
"""
from zrhydro import ModelParams, ThermoTable, linear_rate
from zrhydro.invariant import build_profile, stationarity_test


def main():
    params = ModelParams(p=1.0, alpha=1.0, beta=0.0, N=50)
    prof = build_profile(params, (-120, 120), m_plus=1.0)
    print("two-level stationary profile, p=1, alpha=1, beta=0, N=50")
    print(f"m_minus={prof.fugacity(-1):g}  m_plus={prof.fugacity(1):g}  "
          f"balance residual={prof.residual():.2e}")
    print()
    thermo = ThermoTable(linear_rate(), rho_max=6.0)
    report = stationarity_test(prof, linear_rate(), thermo, t_end=0.5,
                               replicas=100, sites=[-10, -2, 0, 2, 10],
                               master_seed=4)
    print(report)


if __name__ == "__main__":
    main()
