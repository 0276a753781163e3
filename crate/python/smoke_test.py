"""Smoke test for the simrank extension module.

Build and install first, e.g. `pip install --no-build-isolation -e crates/python`
or `maturin develop -m crates/python/Cargo.toml`.
"""

import math
import os
import tempfile

import simrank


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    star = simrank.Graph([(0, 1), (0, 2), (0, 3), (1, 0), (2, 0), (3, 0)])
    assert star.n == 4 and star.num_edges == 6 and len(star) == 4
    assert sorted(star.in_neighbors(0)) == [1, 2, 3]

    d = simrank.estimate_diagonal(star, c=0.8, T=100, L=10, mode="exact")
    assert close(d.values[0], 23 / 75, 1e-6), d.values
    assert all(close(v, 0.2, 1e-6) for v in d.values[1:]), d.values
    assert d.T == 100 and d.mode == "exact"

    bound = 0.8**100 / 0.2
    assert close(simrank.single_pair(star, d, 1, 2), 0.8, bound + 1e-9)
    assert close(simrank.single_pair(star, d, 0, 1), 0.0, 1e-12)
    assert close(simrank.single_pair(star, d, 1, 3, estimator="mc", R=2000), 0.8, 0.1)

    row = dict(simrank.single_source(star, d, 2))
    assert row[2] == 1.0 and close(row[1], 0.8, bound + 1e-9)
    assert [(i, j) for i, j, _ in simrank.all_pairs(star, d)] == [(1, 2), (1, 3), (2, 3)]

    top = simrank.topk(star, d, 1, k=2)
    assert sorted(v for v, _ in top) == [2, 3], top
    assert [(i, j) for i, j, _ in simrank.join(star, d, theta=0.5)] == [(1, 2), (1, 3), (2, 3)]

    s = simrank.naive_simrank(star, c=0.8, T=30)
    assert close(s[1][2], 0.8, 1e-3) and s[0][0] == 1.0

    exact = simrank.exact_diagonal(star, c=0.8, T=100)
    assert all(close(a, b, 1e-8) for a, b in zip(exact.values, d.values))

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "d.txt")
        d.save(path)
        again = simrank.Diagonal.load(path)
        assert again.values == d.values and again.c == d.c

        edges = os.path.join(tmp, "edges.txt")
        with open(edges, "w") as f:
            f.write("# ring\n10 20\n20 30\n30 10\n")
        ring = simrank.Graph.load(edges)
        assert ring.labels == [10, 20, 30]

    try:
        simrank.single_pair(star, d, 1, 99)
    except ValueError as e:
        assert "99" in str(e)
    else:
        raise AssertionError("unknown vertex accepted")

    try:
        simrank.estimate_diagonal(star, c=1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("c=1.5 accepted")

    assert not math.isnan(simrank.single_pair(star, d, 2, 3))
    print("smoke test passed")


if __name__ == "__main__":
    main()
