#!/usr/bin/env python3
# Writes src/kernels/gelu_table.hpp: piecewise polynomial tables for the
# standard normal tail Q(u) = Phi(-u) and density phi(u) on [0, 8.5].
# Each of the 16 intervals holds the Chebyshev interpolant (degree 14,
# computed in 40-digit arithmetic) expanded in s = (u - mid) / half_width.
import sys

import mpmath as mp

mp.mp.dps = 40
PIECES = 16
DEG = 14
UMAX = mp.mpf("8.5")
H = UMAX / PIECES


def interpolant(f, a, b):
    n = DEG + 1
    nodes = [mp.cos(mp.pi * (k + mp.mpf(1) / 2) / n) for k in range(n)]
    vals = [f((a + b) / 2 + (b - a) / 2 * s) for s in nodes]
    cheb = [2 * mp.fsum(vals[k] * mp.cos(mp.pi * j * (k + mp.mpf(1) / 2) / n) for k in range(n)) / n
            for j in range(n)]
    cheb[0] /= 2
    t = [[mp.mpf(1)], [mp.mpf(0), mp.mpf(1)]]
    for m in range(2, n):
        row = [mp.mpf(0)] * (m + 1)
        for i, v in enumerate(t[m - 1]):
            row[i + 1] += 2 * v
        for i, v in enumerate(t[m - 2]):
            row[i] -= v
        t.append(row)
    mono = [mp.mpf(0)] * n
    for j in range(n):
        for i, v in enumerate(t[j]):
            mono[i] += cheb[j] * v
    return mono


def table(name, f):
    cols = [interpolant(f, i * H, (i + 1) * H) for i in range(PIECES)]
    out = [f"alignas(64) inline constexpr double {name}[{DEG + 1}][{PIECES}] = {{"]
    for k in range(DEG + 1):
        vals = ", ".join(repr(float(cols[i][k])) for i in range(PIECES))
        out.append(f"    {{{vals}}},")
    out.append("};")
    return "\n".join(out)


def main():
    path = sys.argv[1] if len(sys.argv) > 1 else "src/kernels/gelu_table.hpp"
    body = f"""#pragma once

// Generated by tools/gen_gelu_table.py; do not edit.
// Piecewise polynomials on [0, {float(UMAX)}] in {PIECES} equal pieces, coefficient-major:
// value = sum_k table[k][piece] * s^k with s in [-1, 1] inside the piece.

#include <algorithm>
#include <cmath>

namespace norm::kernels::gelu {{

inline constexpr int kPieces = {PIECES};
inline constexpr int kDegree = {DEG};
inline constexpr double kMax = {float(UMAX)!r};
inline constexpr double kInvHalfWidth = {float(2 / H)!r};

// Q(u) = Phi(-u), the standard normal tail.
{table("kTail", lambda u: mp.ncdf(-u))}

// phi(u), the standard normal density.
{table("kDensity", lambda u: mp.npdf(u))}

// Scalar evaluation of the tables with the same operation order as the SIMD
// variants. Returns {{Phi(x), phi(x)}}.
struct CdfPdf {{
  double cdf, pdf;
}};

inline CdfPdf eval(double x) {{
  const double u = std::fabs(x);
  if (!(u < kMax)) return {{x < 0.0 ? 0.0 : 1.0, 0.0}};
  const double q = u * kInvHalfWidth;
  const int piece = std::min(static_cast<int>(q * 0.5), kPieces - 1);
  const double s = q - (2.0 * piece + 1.0);
  double t = kTail[kDegree][piece], d = kDensity[kDegree][piece];
  for (int k = kDegree - 1; k >= 0; --k) {{
    t = std::fma(t, s, kTail[k][piece]);
    d = std::fma(d, s, kDensity[k][piece]);
  }}
  return {{x < 0.0 ? t : 1.0 - t, d}};
}}

}}  // namespace norm::kernels::gelu
"""
    with open(path, "w") as fh:
        fh.write(body)


if __name__ == "__main__":
    main()
