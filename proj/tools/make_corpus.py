#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Writes the bundled SDF corpora.

  data/fixture.sdf      30 small molecules from the QM9 chemical space, hand
                        encoded (heavy-atom graph plus explicit hydrogens).
  data/qm9_like.sdf     1200 random valence-respecting molecules with up to 9
                        heavy atoms (C, N, O, F), drawn with a size and ring
                        distribution resembling QM9. Deterministic per seed.

Both files use the MDL V2000 layout that QM9 distributions ship in.
"""

import argparse
import random
from pathlib import Path

VALENCE = {"C": 4, "N": 3, "O": 2, "F": 1}

# name, heavy atoms, bonds (i, j, order; 4 = aromatic), explicit H overrides
FIXTURE = [
    ("methane", "C", [], {}),
    ("ammonia", "N", [], {}),
    ("water", "O", [], {}),
    ("acetylene", "CC", [(0, 1, 3)], {}),
    ("hydrogen_cyanide", "CN", [(0, 1, 3)], {}),
    ("formaldehyde", "CO", [(0, 1, 2)], {}),
    ("methanol", "CO", [(0, 1, 1)], {}),
    ("methylamine", "CN", [(0, 1, 1)], {}),
    ("ethane", "CC", [(0, 1, 1)], {}),
    ("ethylene", "CC", [(0, 1, 2)], {}),
    ("fluoromethane", "CF", [(0, 1, 1)], {}),
    ("acetonitrile", "CCN", [(0, 1, 1), (1, 2, 3)], {}),
    ("acetaldehyde", "CCO", [(0, 1, 1), (1, 2, 2)], {}),
    ("formamide", "NCO", [(0, 1, 1), (1, 2, 2)], {}),
    ("ethanol", "CCO", [(0, 1, 1), (1, 2, 1)], {}),
    ("dimethyl_ether", "COC", [(0, 1, 1), (1, 2, 1)], {}),
    ("propane", "CCC", [(0, 1, 1), (1, 2, 1)], {}),
    ("cyclopropane", "CCC", [(0, 1, 1), (1, 2, 1), (2, 0, 1)], {}),
    ("oxirane", "CCO", [(0, 1, 1), (1, 2, 1), (2, 0, 1)], {}),
    ("trifluoromethane", "CFFF", [(0, 1, 1), (0, 2, 1), (0, 3, 1)], {}),
    ("acetone", "CCCO", [(0, 1, 1), (1, 2, 1), (1, 3, 2)], {}),
    ("isobutane", "CCCC", [(0, 1, 1), (0, 2, 1), (0, 3, 1)], {}),
    ("cyclobutane", "CCCC", [(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)], {}),
    ("tert_butanol", "CCCCO",
     [(0, 1, 1), (0, 2, 1), (0, 3, 1), (0, 4, 1)], {}),
    ("furan", "OCCCC",
     [(0, 1, 4), (1, 2, 4), (2, 3, 4), (3, 4, 4), (4, 0, 4)], {0: 0}),
    ("pyrrole", "NCCCC",
     [(0, 1, 4), (1, 2, 4), (2, 3, 4), (3, 4, 4), (4, 0, 4)], {0: 1}),
    ("benzene", "CCCCCC",
     [(0, 1, 4), (1, 2, 4), (2, 3, 4), (3, 4, 4), (4, 5, 4), (5, 0, 4)], {}),
    ("pyridine", "NCCCCC",
     [(0, 1, 4), (1, 2, 4), (2, 3, 4), (3, 4, 4), (4, 5, 4), (5, 0, 4)], {0: 0}),
    ("cyclohexane", "CCCCCC",
     [(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 4, 1), (4, 5, 1), (5, 0, 1)], {}),
    ("nonane_branched", "CCCCCCCCC",
     [(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 4, 1), (4, 5, 1), (5, 6, 1),
      (6, 7, 1), (2, 8, 1)], {}),
]


def hydrogens(symbols, bonds, overrides):
    used = [0.0] * len(symbols)
    for i, j, order in bonds:
        w = 1.5 if order == 4 else float(order)
        used[i] += w
        used[j] += w
    counts = []
    for k, s in enumerate(symbols):
        if k in overrides:
            counts.append(overrides[k])
        else:
            counts.append(max(0, int(VALENCE[s] - used[k])))
    return counts


def mol_block(name, symbols, bonds, overrides):
    hs = hydrogens(symbols, bonds, overrides)
    atoms = list(symbols)
    all_bonds = list(bonds)
    for k, h in enumerate(hs):
        for _ in range(h):
            atoms.append("H")
            all_bonds.append((k, len(atoms) - 1, 1))
    lines = [name, "  degan-corpus", ""]
    lines.append("%3d%3d  0  0  0  0  0  0  0  0999 V2000" % (len(atoms), len(all_bonds)))
    for k, s in enumerate(atoms):
        lines.append("%10.4f%10.4f%10.4f %-3s 0  0  0  0  0  0  0  0  0  0  0  0"
                     % (1.1 * k, 0.0, 0.0, s))
    for i, j, order in all_bonds:
        lines.append("%3d%3d%3d  0" % (i + 1, j + 1, order))
    lines.append("M  END")
    lines.append("$$$$")
    return "\n".join(lines) + "\n"


def random_molecule(rng):
    n = rng.choices([9, 8, 7, 6, 5, 4], weights=[74, 14, 6, 3, 2, 1])[0]
    symbols = []
    free = []
    bonds = {}
    first = rng.choices("CNO", weights=[80, 10, 10])[0]
    symbols.append(first)
    free.append(VALENCE[first])
    while len(symbols) < n:
        anchors = [k for k in range(len(symbols)) if free[k] >= 1]
        if not anchors:
            break
        a = rng.choice(anchors)
        s = rng.choices("CNOF", weights=[68, 13, 16, 3])[0]
        symbols.append(s)
        free.append(VALENCE[s] - 1)
        free[a] -= 1
        bonds[(a, len(symbols) - 1)] = 1
    # ring closures
    rings = rng.choices([0, 1, 2, 3], weights=[28, 42, 22, 8])[0]
    for _ in range(rings):
        pairs = [(i, j) for i in range(len(symbols)) for j in range(i + 1, len(symbols))
                 if free[i] >= 1 and free[j] >= 1 and (i, j) not in bonds]
        if not pairs:
            break
        i, j = rng.choice(pairs)
        bonds[(i, j)] = 1
        free[i] -= 1
        free[j] -= 1
    # unsaturation
    for key in sorted(bonds):
        i, j = key
        if rng.random() < 0.18 and free[i] >= 1 and free[j] >= 1:
            extra = 2 if (rng.random() < 0.15 and free[i] >= 2 and free[j] >= 2) else 1
            bonds[key] += extra
            free[i] -= extra
            free[j] -= extra
    return symbols, [(i, j, o) for (i, j), o in sorted(bonds.items())]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default=str(Path(__file__).resolve().parent.parent / "data"))
    parser.add_argument("--count", type=int, default=1200)
    parser.add_argument("--seed", type=int, default=20201206)
    args = parser.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "fixture.sdf", "w") as f:
        for name, symbols, bonds, overrides in FIXTURE:
            f.write(mol_block(name, symbols, bonds, overrides))

    rng = random.Random(args.seed)
    with open(out / "qm9_like.sdf", "w") as f:
        for k in range(args.count):
            symbols, bonds = random_molecule(rng)
            f.write(mol_block("gen_%05d" % k, symbols, bonds, {}))


if __name__ == "__main__":
    main()
