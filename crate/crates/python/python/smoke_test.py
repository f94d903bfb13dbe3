"""Quick end-to-end check of the extension module."""

import math

import tensense_py as ts


def main():
    x = ts.Tensor([2, 2, 2], [1, 0, 0, 0, 0, 0, 0, 2])
    assert x.dims == [2, 2, 2]
    assert abs(x.frobenius() - math.sqrt(5)) < 1e-12
    h = x.hosvd()
    assert h["residuals"]["reconstruction"] < 1e-12
    assert abs(x.operator_norm() - 2.0) < 1e-9
    assert abs(x.nuclear_avg() - 3.0) < 1e-12

    assert abs(ts.omega_star([1.5], 1.0) - 0.5) < 1e-12
    assert abs(ts.omega_biconj([1.0], 1.0) - 1.0) < 1e-6
    assert math.isinf(ts.omega_biconj([2.0, 0.0], 1.0))
    p = ts.prox_omega_biconj([0.9, 0.05], 1.0, 0.1)
    assert abs(p[0] - 0.8) < 1e-4 and abs(p[1]) < 1e-4

    truth = ts.Tensor.random_tucker([3, 3, 3], [1, 1, 1], 7)
    e = ts.Ensemble([3, 3, 3], 20, 11)
    est, diag = e.recover(e.forward(truth))
    err = math.sqrt(sum((a - b) ** 2 for a, b in zip(est.data, truth.data))) / truth.frobenius()
    assert diag["converged"] and err < 1e-6, (diag["converged"], err)

    b = ts.bound_nuclear([2, 2, 2], 8, 1.0, "stated")
    assert abs(b["value"] - 3.759942) < 1e-5
    c = ts.covering_bound(1.0, 0.5, 2, [2, 2], [1, 1])
    assert abs(c["intermediates"]["count"] - 629856) < 1e-3

    rows = ts.experiment('{"dims":[2,2,2],"m_values":[8],"trials":2}')
    assert len(rows) == 2 and all(r["converged"] for r in rows)
    print("smoke test ok")


if __name__ == "__main__":
    main()
