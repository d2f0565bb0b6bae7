"""Smoke test for the pysoftclust extension module.

Build and install first:

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/pysoftclust-*.whl
"""

import math

import pysoftclust as sc


def main():
    assert "two_separate" in sc.scenarios()
    points, truth = sc.generate("two_separate", seed=3)
    assert len(points) == len(truth) == 200

    fit = sc.fcm_fit(points, 2, seed=3)
    assert fit.converged
    assert len(fit.memberships) == 2 and len(fit.memberships[0]) == 200
    for i in range(len(points)):
        assert abs(fit.memberships[0][i] + fit.memberships[1][i] - 1.0) < 1e-9
    corners = sorted(round(x) + round(y) for x, y in fit.centroids)
    assert corners == [0, 20], fit.centroids
    assert all(b <= a + 1e-9 for a, b in zip(fit.cost_trace, fit.cost_trace[1:]))

    typ = sc.pcm_fit(points, 2, k=1.0, seed=3)
    assert typ.eta is not None and len(typ.eta) == 2

    u = sc.update_memberships([[1.0]], [[0.0], [3.0]])
    assert abs(u[0][0] - 0.8) < 1e-12 and abs(u[1][0] - 0.2) < 1e-12

    order, reordered = sc.vat([[0, 10, 1], [10, 0, 9], [1, 9, 0]])
    assert order == [0, 2, 1]
    assert reordered[1][2] == 9
    chain = sc.ivat([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    assert chain[0][2] == 1
    assert sc.pgm([[0.0]]) == b"P5\n1 1\n255\n\x00"

    assert sc.dunn_index([[0], [1], [10], [11]], [0, 0, 1, 1]) == 9
    dbi = sc.davies_bouldin([[-1], [1], [9], [11]], [0, 0, 1, 1], [[0], [10]])
    assert abs(dbi - 0.2) < 1e-12
    assert abs(sc.partition_coefficient([[0.8, 0.3], [0.2, 0.7]]) - 0.63) < 1e-12
    assert sc.partition_coefficient([[0.9, 0.9], [0.9, 0.9]]) > 1

    rows = sc.sweep(points, 2, 4, seed=3)
    assert [r["c"] for r in rows] == [2, 3, 4]
    best = max(rows, key=lambda r: r["pc"])
    assert best["c"] == 2 and best["pc"] > 0.85

    try:
        sc.fcm_fit(points[:3], 5)
    except ValueError as e:
        assert "exceeds" in str(e)
    else:
        raise AssertionError("c > n accepted")

    d = sc.pairwise([[0, 0], [3, 4]])
    assert math.isclose(d[0][1], 5.0)
    print("pysoftclust smoke test passed")


if __name__ == "__main__":
    main()
