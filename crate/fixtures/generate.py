#!/usr/bin/env python3
"""Writes the triangulation and parameter fixtures.

Run from the repository root: python3 fixtures/generate.py

Triangulation files are 0-based: entry k of tetrahedron i describes the face
opposite vertex k, and perm sends vertex v of tetrahedron i to vertex perm[v]
of the target. Parameter files use 1-based edge-face names "(ij)k".

Edge ratios of the two deformation families are given by sign tables: "+"
means the edge ratio is t and "-" means 1/t. Gluing parameters are the values
kappa that enter the Glue matrix at the named edge-face; a value at (T, s)
implies 1/kappa at its glued partner.
"""

import json
import os

COLUMNS = ["(12)3", "(21)4", "(34)1", "(43)2", "(13)4", "(31)2",
           "(24)3", "(42)1", "(14)2", "(41)3", "(23)1", "(32)4"]

ROOT = os.path.dirname(os.path.abspath(__file__))


def parse(name):
    i, j, k = int(name[1]), int(name[2]), int(name[4])
    return i, j, k, 10 - i - j - k


def render(p):
    return f"({p[0]}{p[1]}){p[2]}"


def partner(gluings, tet, sigma):
    i, j, k, l = parse(sigma)
    entry = gluings[tet][l - 1]
    pi = [p + 1 for p in entry["perm"]]
    return entry["tet"], render((pi[j - 1], pi[i - 1], pi[k - 1]))


def tri_file(rows, edge_orders=None):
    out = {
        "num_tetrahedra": len(rows),
        "gluings": [[{"tet": t, "perm": p} for t, p in row] for row in rows],
    }
    if edge_orders:
        out["edge_orders"] = edge_orders
    return out


def params_file(gluings, edge_values, kappa):
    """edge_values[T][column] and kappa[T][column] for every edge-face."""
    edge_ratios = {}
    for t, row in enumerate(edge_values):
        for name, v in row.items():
            edge_ratios[f"{t}:{name}"] = v
    gluing_params = {}
    for t, row in enumerate(kappa):
        for name, v in row.items():
            t2, tau = partner(gluings, t, name)
            gluing_params[f"{t}:{name}|{t2}:{tau}"] = v
    return {"edge_ratios": edge_ratios, "gluing_params": gluing_params}


def signs_to_values(signs, t):
    return {c: (t if s == "+" else 1.0 / t) for c, s in zip(COLUMNS, signs.split())}


def write(path, obj):
    with open(os.path.join(ROOT, path), "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def t_label(t):
    return ("%g" % t)


# Figure-eight knot complement: two tetrahedra glued by the same pattern.
FIG8_ROW = [[0, 1, 3, 2], [1, 3, 0, 2], [1, 0, 2, 3], [2, 0, 3, 1]]
FIG8 = tri_file([[(1, p) for p in FIG8_ROW], [(0, p) for p in FIG8_ROW]])
FIG8_SIGNS = ["+ + + + - - + + - - - -", "- - - - + + - - + + + +"]


def fig8_params(t):
    e = [signs_to_values(s, t) for s in FIG8_SIGNS]
    kappa = [{c: 1.0 for c in COLUMNS} for _ in range(2)]
    # The distinguished pairs of faces: the 0-based labels (12)0 and (30)2
    # shift to the 1-based (23)1 and (41)3.
    for name in ("(23)1", "(41)3"):
        kappa[0][name] = t ** -2
        kappa[1][name] = t ** 2
    return params_file(FIG8["gluings"], e, kappa)


# Figure-eight sister manifold. The first sign row differs from the second
# only through the distinguished gluings below; every row satisfies e_s = e_conj(s).
SISTER = tri_file([
    [(1, [0, 1, 3, 2]), (1, [3, 2, 0, 1]), (1, [1, 2, 3, 0]), (1, [0, 3, 2, 1])],
    [(0, [0, 1, 3, 2]), (0, [0, 3, 2, 1]), (0, [2, 3, 1, 0]), (0, [3, 0, 1, 2])],
])
SISTER_SIGNS = ["+ + - - - - - - + + + +", "- - - - - - + + + + + +"]


def sister_params(t):
    e = [signs_to_values(s, t) for s in SISTER_SIGNS]
    kappa = [{c: 1.0 for c in COLUMNS} for _ in range(2)]
    for name in ("(24)3", "(13)4"):
        kappa[0][name] = t ** -2
    for name in ("(14)2", "(32)4"):
        kappa[1][name] = t ** 2
    return params_file(SISTER["gluings"], e, kappa)


# Hopf link orbifold: one tetrahedron, every edge of cone order 3.
HOPF = tri_file(
    [[(0, [1, 0, 2, 3]), (0, [1, 0, 2, 3]), (0, [0, 1, 3, 2]), (0, [0, 1, 3, 2])]],
    {"0": 3, "1": 3, "2": 3},
)
HOPF_E = {"(12)3": 1.0, "(13)4": 1.0 / 3.0, "(14)2": 3.0, "(23)1": 3.0, "(24)3": 1.0 / 3.0, "(34)1": 1.0}
HOPF_KAPPA = dict(zip(COLUMNS, [1.0] * 4 + [1.0 / 3.0] * 4 + [3.0] * 4))


def main():
    write("fig8/fig8.tri", FIG8)
    for t in (0.5, 1.0, 2.0, 3.0):
        write(f"fig8/t{t_label(t)}.params", fig8_params(t))
    write("sister/sister.tri", SISTER)
    for t in (0.5, 1.0, 2.0):
        write(f"sister/t{t_label(t)}.params", sister_params(t))
    write("hopf/hopf.tri", HOPF)
    write("hopf/solution.params", params_file(HOPF["gluings"], [HOPF_E], [HOPF_KAPPA]))


if __name__ == "__main__":
    main()
