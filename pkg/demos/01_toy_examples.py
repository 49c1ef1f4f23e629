"""Deterministic nodes, importance weights: the two one-dimensional toy problems.

A five-node Gauss-Hermite grid under N(0, 1) integrates x^p times the
Nakagami density exactly up to p = 4 because the importance-weighted
integrand is then a polynomial of degree <= 9. Beyond that the error jumps.
The second part sweeps the proposal scale for an N(1, 1) target and compares
IGH with plain importance sampling at the same number of target evaluations.
"""
import numpy as np

from iquad import GaussianProposal, igh_estimate, igh_weights, is_estimate, make_nakagami
from iquad.targets import make_gaussian_target

target = make_nakagami(0.0, 1.0, 4.0)
q = GaussianProposal([0.0], 1.0)
ws = igh_weights(q.points(5), target, q)
print("Nakagami(0, 1, 4), five nodes under N(0, 1)")
for p in (2, 4, 6, 8, 10):
    est = igh_estimate(ws, lambda x: x[:, 0] ** p, target.log_z)
    exact = target.moment(p)
    print(f"  E[x^{p:<2}] exact {exact:10.4f}  IGH {est.unnormalized[0]:10.4f}  "
          f"rel. error {abs(est.unnormalized[0] - exact) / exact:.1e}")

print("\nN(1, 1) target, proposal N(1, sigma^2), five points, MSE of Z over 200 IS runs")
gauss = make_gaussian_target(1.0, 1.0)
for sigma in (0.5, 0.75, 1.0, 1.5, 2.0, 3.0):
    q = GaussianProposal([1.0], sigma**2)
    igh = (igh_estimate(igh_weights(q.points(5), gauss, q)).z_hat - 1.0) ** 2
    mc = np.mean([(is_estimate(gauss, q, None, 5, s).z_hat - 1.0) ** 2 for s in range(200)])
    print(f"  sigma {sigma:4.2f}  IGH {igh:9.2e}  IS {mc:9.2e}")
