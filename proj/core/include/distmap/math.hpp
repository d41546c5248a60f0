#pragma once

#include <cstddef>
#include <span>
#include <vector>

// Scalar special functions and small dense linear algebra used throughout the
// library. Everything here is deterministic, allocation-free where possible,
// and accurate enough to back the numeric contracts of the statistical layers
// (log-gamma/digamma to ~1e-12 relative, incomplete beta to ~1e-10).
namespace distmap::math {

// log Gamma(x) for x > 0 (Lanczos approximation with reflection for x < 0.5).
double log_gamma(double x);

// Digamma psi(x) = d/dx log Gamma(x) for x > 0.
double digamma(double x);

// log B(a,b) = log Gamma(a) + log Gamma(b) - log Gamma(a+b).
double log_beta(double a, double b);

// Regularized incomplete beta I_x(a,b), continued-fraction evaluation.
// Domain: a,b > 0, x in [0,1].
double inc_beta(double a, double b, double x);

// Inverse of inc_beta in x: returns x with I_x(a,b) = p, p in [0,1].
double inc_beta_inv(double a, double b, double p);

// Standard normal CDF and quantile function (Wichura's algorithm).
double norm_cdf(double z);
double norm_ppf(double p);

// Normal log-density with mean mu and standard deviation sd.
double norm_logpdf(double x, double mu, double sd);

// log(sum_i exp(v_i)), stabilized. Empty input -> -inf.
double log_sum_exp(std::span<const double> v);

// Stable softplus log(1+e^z), its inverse log(e^y - 1) for y > 0, and the
// logistic sigmoid.
double softplus(double z);
double softplus_inv(double y);
double sigmoid(double z);

// Cholesky factorization of a dense symmetric positive definite matrix stored
// row-major (n x n). Produces the lower triangle L with A = L L^T.
struct Cholesky {
  std::size_t n = 0;
  std::vector<double> lower;  // row-major, upper part zeroed
  bool ok = false;
};

Cholesky cholesky(const std::vector<double>& a, std::size_t n);

// Solve A z = rhs given the factorization of A.
std::vector<double> chol_solve(const Cholesky& f, std::vector<double> rhs);

// log det A from the factorization.
double chol_logdet(const Cholesky& f);

// Full inverse of A (row-major n x n) from the factorization.
std::vector<double> chol_inverse(const Cholesky& f);

}  // namespace distmap::math
