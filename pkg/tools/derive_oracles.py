"""Derive the frozen oracle constants used by the test suite.

Every hand-checkable expected value in tests/ was computed here first, with
mpmath at 50 significant digits, and then pasted into the tests as a literal.
Run this script to regenerate them:

    pip install mpmath
    python tools/derive_oracles.py

The implementation under src/ is NOT imported here on purpose: these numbers
must stay independent of the code they test.
"""

from mpmath import mp, mpf, log, sqrt, findroot

mp.dps = 50


def header(title):
    print()
    print("#", title)


def main():
    header("persistence alpha bound: beta=0.6 sigma=0.01 mu+gamma=40 N=100, h=0.25 theta=2")
    beta, sigma, mug, N = mpf("0.6"), mpf("0.01"), mpf("40"), mpf("100")
    h, theta = mpf("0.25"), mpf("2")
    s2N = sigma**2 * N
    rad = beta**2 - 2 * sigma**2 * mug
    denom = s2N - beta + sqrt(rad)
    bound = h ** (-theta) * log(s2N / denom)
    print("bound      =", bound)
    print("radicand   =", rad)
    print("denominator=", denom, "(equals sigma^2 * lambda, see below)")

    header("persistence root lambda: same params")
    phi = lambda lam: beta * N - mug - beta * lam - sigma**2 / 2 * (N - lam) ** 2
    lam = findroot(phi, mpf("33"))
    print("lambda     =", lam)
    print("residual at the 4-decimal rounding 32.9588:", phi(mpf("32.9588")))

    header("degenerate-noise lambda: sigma=1e-8, closed-form limit (beta*N-mu-gamma)/beta")
    sig0 = mpf("1e-8")
    phi0 = lambda lam: beta * N - mug - beta * lam - sig0**2 / 2 * (N - lam) ** 2
    print("lambda(1e-8) =", findroot(phi0, mpf("33")))
    print("limit 100/3  =", mpf(100) / 3)

    header("natural-log OLS on the rounded published error rows (h = 2^-10 .. 2^-6)")

    def ols(hs, errs):
        xs = [log(mpf(x)) for x in hs]
        ys = [log(mpf(e)) for e in errs]
        n = len(xs)
        xb, yb = sum(xs) / n, sum(ys) / n
        q = sum((x - xb) * (y - yb) for x, y in zip(xs, ys)) / sum((x - xb) ** 2 for x in xs)
        c = yb - q * xb
        ssr = sum((y - (c + q * x)) ** 2 for x, y in zip(xs, ys))
        return q, ssr

    hs = [mpf(2) ** -k for k in (10, 9, 8, 7, 6)]
    for name, row in [
        ("row A", ["0.0006", "0.0013", "0.0026", "0.0051", "0.0103"]),
        ("row B", ["0.0014", "0.0029", "0.0059", "0.0120", "0.0243"]),
    ]:
        q, ssr = ols(hs, row)
        print(f"{name}: q = {q}")
        print(f"{name}: ssr = {ssr}")

    header("direct Milstein with dW=0, three steps: I0=1, beta=0.5 sigma=0.2 mu+gamma=4 N=10 h=0.25")
    b_, s_, m_, N_ = mpf("0.5"), mpf("0.2"), mpf("4"), mpf("10")
    hh = mpf("0.25")
    I = mpf("1")
    for k in range(3):
        a = I * (b_ * N_ - m_ - b_ * I)
        bbp = s_ * I * (N_ - I) * s_ * (N_ - 2 * I)
        I = I + a * hh + bbp * (-hh / 2)
        print(f"I_{k+1} =", I)

    header("extinction threshold f_max^sigma")
    print("case (i), beta=0.5 sigma=0.2 mu+gamma=4 N=10:",
          b_ * N_ - m_ - s_**2 * N_**2 / 2)
    b3, s3, m3 = mpf("0.42"), mpf("0.9"), mpf("10")
    print("case (ii), beta=0.42 sigma=0.9 mu+gamma=10:", b3**2 / (2 * s3**2) - m3)
    print("case (ii), beta=0.6 sigma=0.1 mu+gamma=40:",
          mpf("0.6") ** 2 / (2 * mpf("0.1") ** 2) - 40)

    header("log-coefficient spot values, beta=0.5 sigma=0.2 mu+gamma=4 N=10")
    f0 = -s_**2 / 2 + (s_**2 * N_ - b_) + (b_ * N_ - m_ - s_**2 * N_**2 / 2)
    gg0 = -(s_**2) * (N_ - 1)
    print("f(0)   =", f0)
    print("gg'(0) =", gg0)
    print("one LCM drift step from Y=0, dW=0, h=0.25:", f0 * hh + gg0 * (-hh / 2))

    header("sigma-gap parameter set (neither extinction case): beta=0.5 N=10 mu+gamma=1 sigma=0.3")
    bg, Ng, mg, sg = mpf("0.5"), mpf("10"), mpf("1"), mpf("0.3")
    print("sigma^2 =", sg**2, " beta/N =", bg / Ng, " beta^2/(2(mu+gamma)) =", bg**2 / (2 * mg))
    print("R0s =", bg * Ng / mg - sg**2 * Ng**2 / (2 * mg))


if __name__ == "__main__":
    main()
