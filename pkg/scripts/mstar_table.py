"""Print the critical mean density m*(n) and the leading-term sign on either side."""
import argparse

from kscollapse.diagnostics import leading_terms, m_star


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-max", type=int, default=8)
    args = ap.parse_args()
    print(f"{'n':>3} {'m*(n)':>24} {'lead(m*/2)':>12} {'lead(2m*)':>12}")
    for n in range(3, args.n_max + 1):
        ms = m_star(n)
        print(f"{n:>3} {ms:>24.17g} {leading_terms(ms / 2, n):>12.4g} {leading_terms(2 * ms, n):>12.4g}")


if __name__ == "__main__":
    main()
