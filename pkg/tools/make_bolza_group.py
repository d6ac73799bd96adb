"""Write the Bolza group file: the four octagon side pairings, moved from the
disk to the half-plane by the Cayley map, at 30 significant digits."""
import sys

import mpmath as mp

mp.mp.dps = 50


def generators():
    a = 1 + mp.sqrt(2)
    b = mp.sqrt(2 + 2 * mp.sqrt(2))
    C = mp.matrix([[-1j, 1j], [1, 1]])
    out = []
    for k in range(4):
        e = mp.expjpi(mp.mpf(k) / 4)
        g = mp.matrix([[a, b * e], [b * mp.conj(e), a]])
        h = C * g * C ** -1
        m = [mp.re(h[i, j]) for i in range(2) for j in range(2)]
        assert max(abs(mp.im(h[i, j])) for i in range(2) for j in range(2)) < mp.mpf(10) ** -40
        if m[0] < 0 or (m[0] == 0 and m[1] < 0):
            m = [-v for v in m]
        out.append(m)
    return out


def main(path):
    lines = [
        "# Bolza surface: regular octagon with angles pi/4, opposite sides paired.",
        "# Disk pairings [[1+sqrt2, s e^(ik pi/4)], [s e^(-ik pi/4), 1+sqrt2]],",
        "# s = sqrt(2+2 sqrt2), k = 0..3, conjugated by z = i(1-w)/(1+w).",
        "# Upper-case letters denote inverses.",
        "genus 2",
    ]
    for name, m in zip("abcd", generators()):
        lines.append(name + " " + " ".join(mp.nstr(v, 30, min_fixed=-5, max_fixed=5) for v in m))
    lines.append("relation aBcDAbCd")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1])
