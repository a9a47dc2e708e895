// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "ptl/discretize.hpp"

namespace ptl {

struct SpectralOptions {
  int dense_limit{2000};        // dense whitening and SVD up to this many unknowns
  double tolerance{1e-10};      // iterative paths: relative convergence target
  int max_iterations{300};      // iterative paths: restarts (Arnoldi) or Lanczos steps
  double near_singular{1e6};    // resolvent norms above this are flagged
};

struct EigenPair {
  std::complex<double> value;
  double residual;  // ||A x - lambda x||_M / ||x||_M
  bool converged;
};

/// Spectral work in the energy norm. With M = L L^T, the whitened generator B = L^T A L^{-T}
/// has Euclidean norms equal to M-norms of A, so ||(i lambda - A)^{-1}||_M = 1 / sigma_min(i lambda - B).
/// Small systems form B densely; larger ones apply it through sparse factorizations.
class SpectralContext {
 public:
  explicit SpectralContext(const GeneratorAssembly& assembly, SpectralOptions options = {});
  ~SpectralContext();
  SpectralContext(SpectralContext&&) noexcept;
  SpectralContext& operator=(SpectralContext&&) noexcept;

  int size() const;
  bool dense() const;
  const SpectralOptions& options() const;

  /// `count` eigenvalues nearest `shift` (all of them when count <= 0 on the dense path),
  /// sorted by distance to the shift, ties broken by real then imaginary part.
  std::vector<EigenPair> eigenvalues(int count, std::complex<double> shift) const;

  /// ||(i lambda - A)^{-1}||_M. Safe to call concurrently.
  double resolvent_norm(double lambda) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::vector<EigenPair> eigenvalues(const GeneratorAssembly& assembly, int count, std::complex<double> shift,
                                   const SpectralOptions& options = {});

double resolvent_norm(const GeneratorAssembly& assembly, double lambda, const SpectralOptions& options = {});

struct ResolventScan {
  std::vector<double> lambdas;
  std::vector<double> norms;
  std::vector<double> scaled;  // lambda^{-p} * norm
  std::vector<bool> near_singular;
  double p{1.6};
  double fit_exponent{0.0};  // least-squares slope of log norm against log lambda over the top decade
  double sup_scaled{0.0};
  double sup_scaled_at{0.0};
};

/// Norms at n_points log-spaced values in [lambda_min, lambda_max]. Points are split across
/// `threads` workers and written back by index, so the result does not depend on the thread count.
ResolventScan resolvent_scan(const SpectralContext& context, double lambda_min, double lambda_max, int n_points,
                             int threads = 1, double p = 1.6);

ResolventScan resolvent_scan(const GeneratorAssembly& assembly, double lambda_min, double lambda_max, int n_points,
                             int threads = 1, const SpectralOptions& options = {});

/// Least-squares slope of log y against log x over points with x >= x.back() / 10.
double top_decade_slope(const std::vector<double>& x, const std::vector<double>& y);

std::string scan_csv(const ResolventScan& scan);
std::string spectrum_csv(const std::vector<EigenPair>& pairs);

}  // namespace ptl
