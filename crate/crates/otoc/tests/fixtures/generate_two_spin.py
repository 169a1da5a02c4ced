"""Writes the expected curves and MQC files of two_spin.toml.

For two spins under the double-quantum Hamiltonian the echo is perfect
(f = 1) and the coherence spectrum is f_0 = cos^2(dt),
f_{+-2} = sin^2(dt)/2, so m2 = 4 sin^2(dt) and K = 8 sin^2(dt).
"""

import math
import pathlib

D = 2.0 * math.pi * 13.0e3
TIMES_US = [2.0 * i for i in range(1, 11)]
HERE = pathlib.Path(__file__).parent


def fmt(x):
    """Ten significant digits in Rust's `{:.9e}` style."""
    if math.isnan(x):
        return "nan"
    if abs(x) < 1e-14:
        return "0"
    mantissa, exponent = f"{x:.9e}".split("e")
    return f"{mantissa}e{int(exponent)}"


def main():
    curves = ["p,t_us,fidelity,m2,K,chi,chi_rate"]
    mqc = ["p,t_us,M,f_M"]
    for t_us in TIMES_US:
        s2 = math.sin(D * t_us * 1e-6) ** 2
        curves.append(",".join([fmt(0.0), fmt(t_us), fmt(1.0), fmt(4 * s2), fmt(8 * s2), fmt(0.0), fmt(0.0)]))
        for m, f in zip(range(-2, 3), [s2 / 2, 0.0, 1 - s2, 0.0, s2 / 2]):
            mqc.append(f"{fmt(0.0)},{fmt(t_us)},{m},{fmt(f)}")
    (HERE / "two_spin_curves.csv").write_text("\n".join(curves) + "\n")
    (HERE / "two_spin_mqc.csv").write_text("\n".join(mqc) + "\n")


if __name__ == "__main__":
    main()
