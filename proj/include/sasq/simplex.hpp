#ifndef SASQ_SIMPLEX_HPP
#define SASQ_SIMPLEX_HPP

#include "sasq/linalg.hpp"

namespace sasq {

// Support threshold of the simplex projection: the projection keeps the k
// largest scores and clips the rest at tau.
struct SparsemaxThreshold {
  int k = 0;
  double tau = 0.0;
};

SparsemaxThreshold sparsemax_threshold(const Vec& z);

// Euclidean projection of z onto the probability simplex. Produces exact
// zeros outside the support; depends on z only through z - max(z).
Vec sparsemax(const Vec& z);

// Generalized Jacobian-vector product of sparsemax at z applied to v:
// (v - mean of v over the support) on the support, 0 elsewhere. The Jacobian
// is symmetric, so this doubles as the vector-Jacobian product for backprop.
Vec sparsemax_jvp(const Vec& z, const Vec& v);

// Index set of strictly positive entries of sparsemax(z).
std::vector<int> sparsemax_support(const Vec& z);

Vec softmax(const Vec& z);

// (diag(p) - p p^T) v for p = softmax(z); symmetric like the sparse one.
Vec softmax_jvp(const Vec& z, const Vec& v);

// Brute-force simplex projection by support enumeration. Exponential in n,
// capped at n <= 20; exists to cross-check sparsemax, not for production use.
Vec oracle_simplex_projection(const Vec& z);

}  // namespace sasq

#endif
