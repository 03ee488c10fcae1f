"""Regenerate tests/data/frozen_oracles.json from the mpmath oracles.

Run ``python3 tests/make_frozen.py``; the file is committed so the tests
compare against fixed numbers.
"""

import json
import os

import oracles

HERE = os.path.dirname(__file__)


def main():
    out = {"e2lsh": [], "fastlsh": [], "charfn": []}
    for s, w in [(0.5, 1.0), (1.0, 1.0), (1.0, 4.0), (2.5, 1.5), (7.0, 10.0), (0.1, 4.0)]:
        out["e2lsh"].append({"s": s, "w": w, "p": float(oracles.mp_e2lsh(s, w))})
    for mu, sig, w in [(0.25, 0.01, 1.0), (0.25, 0.2, 1.0), (1.0, 0.5, 2.0),
                       (4.0, 3.0, 1.5), (0.5, 2.0, 0.7), (9.0, 1.0, 4.0)]:
        out["fastlsh"].append({"mu_t": mu, "sigma_t": sig, "w": w,
                               "p": float(oracles.mp_collision_mixture(mu, sig, w))})
    for x, mu, sig in [(0.5, 1.0, 0.3), (2.0, 1.0, 0.3), (1.0, 0.2, 1.0),
                       (5.0, 0.5, 0.5), (30.0, 1.0, 0.1), (3.0, 2.0, 4.0)]:
        out["charfn"].append({"x": x, "mu_t": mu, "sigma_t": sig,
                              "phi": float(oracles.mp_charfn(x, mu, sig))})
    with open(os.path.join(HERE, "data", "frozen_oracles.json"), "w") as fh:
        json.dump(out, fh, indent=2)
        fh.write("\n")


if __name__ == "__main__":
    main()
