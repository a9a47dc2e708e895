// SPDX-License-Identifier: Apache-2.0
#include "ptl/spectra.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "ptl/io.hpp"

namespace ptl {

namespace {

using cd = std::complex<double>;
using ComplexSparse = Eigen::SparseMatrix<cd>;
using Dense = Eigen::MatrixXd;
using DenseC = Eigen::MatrixXcd;

constexpr double kReportedResidual = 1e-8;

ComplexVector start_vector(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  ComplexVector v(n);
  for (int i = 0; i < n; ++i) v(i) = {z(rng), z(rng)};
  return v / v.norm();
}

ComplexSparse shifted(const SparseMatrix& A, cd shift) {
  ComplexSparse C = -A.cast<cd>();
  ComplexSparse I(A.rows(), A.cols());
  I.setIdentity();
  C += shift * I;
  C.makeCompressed();
  return C;  // shift I - A
}

void sort_pairs(std::vector<EigenPair>& pairs, cd shift) {
  std::sort(pairs.begin(), pairs.end(), [shift](const EigenPair& a, const EigenPair& b) {
    const double da = std::abs(a.value - shift), db = std::abs(b.value - shift);
    if (da != db) return da < db;
    if (a.value.real() != b.value.real()) return a.value.real() < b.value.real();
    return a.value.imag() < b.value.imag();
  });
}

bool residual_ok(double residual, cd value) { return residual <= kReportedResidual * std::max(1.0, std::abs(value)); }

}  // namespace

struct SpectralContext::Impl {
  SpectralOptions options;
  SparseMatrix A;
  int n{0};
  bool dense{false};

  // dense path
  Dense B;

  // sparse path: M = F F^T with F = P^T L
  Eigen::SimplicialLLT<SparseMatrix> llt;

  Eigen::VectorXd solve_upper(const Eigen::VectorXd& y) const { return llt.matrixU().solve(y); }

  // F^{-T} y = P^T L^{-T} y
  ComplexVector apply_F_inv_T(const ComplexVector& y) const {
    ComplexVector out(n);
    out.real() = llt.permutationPinv() * solve_upper(y.real());
    out.imag() = llt.permutationPinv() * solve_upper(y.imag());
    return out;
  }
  // F^T x = L^T P x
  ComplexVector apply_F_T(const ComplexVector& x) const {
    ComplexVector out(n);
    const Eigen::VectorXd re = llt.permutationP() * x.real();
    const Eigen::VectorXd im = llt.permutationP() * x.imag();
    out.real() = llt.matrixU() * re;
    out.imag() = llt.matrixU() * im;
    return out;
  }
  // F^{-1} y = L^{-1} P y
  ComplexVector apply_F_inv(const ComplexVector& y) const {
    ComplexVector out(n);
    const Eigen::VectorXd re = llt.permutationP() * y.real();
    const Eigen::VectorXd im = llt.permutationP() * y.imag();
    out.real() = llt.matrixL().solve(re);
    out.imag() = llt.matrixL().solve(im);
    return out;
  }
  // F x = P^T L x
  ComplexVector apply_F(const ComplexVector& x) const {
    ComplexVector out(n);
    const Eigen::VectorXd re = llt.matrixL() * x.real();
    const Eigen::VectorXd im = llt.matrixL() * x.imag();
    out.real() = llt.permutationPinv() * re;
    out.imag() = llt.permutationPinv() * im;
    return out;
  }
  ComplexVector apply_B(const ComplexVector& y) const {
    if (dense) return B.cast<cd>() * y;
    const ComplexVector x = apply_F_inv_T(y);
    return apply_F_T(A.cast<cd>() * x);
  }

  double dense_resolvent(double lambda) const {
    DenseC C = -B.cast<cd>();
    C.diagonal().array() += cd(0.0, lambda);
    Eigen::BDCSVD<DenseC> svd(C);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    return smin > 0.0 ? 1.0 / smin : std::numeric_limits<double>::infinity();
  }

  // Largest eigenvalue of the Hermitian operator C^{-H} C^{-1}, C = F^T (i lambda - A) F^{-T},
  // by restarted Lanczos with full reorthogonalization.
  double sparse_resolvent(double lambda) const {
    Eigen::SparseLU<ComplexSparse> lu;
    const ComplexSparse C = shifted(A, cd(0.0, lambda));
    lu.analyzePattern(C);
    lu.factorize(C);
    if (lu.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    auto apply = [&](const ComplexVector& y) {
      const ComplexVector w = apply_F_T(lu.solve(apply_F_inv_T(y)));  // C^{-1} y
      return apply_F_inv(lu.adjoint().solve(apply_F(w)));            // C^{-H} w
    };
    const int m = std::min(n, 40);
    ComplexVector v = start_vector(n, 0x5eed);
    double theta = 0.0;
    for (int restart = 0; restart < options.max_iterations; ++restart) {
      DenseC V(n, m);
      Eigen::VectorXd alpha(m), beta(m);
      int k = 0;
      V.col(0) = v;
      for (; k < m; ++k) {
        ComplexVector w = apply(V.col(k));
        alpha(k) = V.col(k).dot(w).real();
        for (int pass = 0; pass < 2; ++pass) w -= V.leftCols(k + 1) * (V.leftCols(k + 1).adjoint() * w);
        beta(k) = w.norm();
        if (k + 1 < m) {
          if (beta(k) <= 1e-14 * std::abs(alpha(k))) {
            ++k;
            break;
          }
          V.col(k + 1) = w / beta(k);
        }
      }
      Dense T = Dense::Zero(k, k);
      for (int i = 0; i < k; ++i) {
        T(i, i) = alpha(i);
        if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta(i);
      }
      Eigen::SelfAdjointEigenSolver<Dense> eig(T);
      const double top = eig.eigenvalues()(k - 1);
      const Eigen::VectorXd s = eig.eigenvectors().col(k - 1);
      const double estimate = std::abs(beta(k - 1) * s(k - 1));
      v = V.leftCols(k) * s.cast<cd>();
      v /= v.norm();
      const bool done = estimate <= options.tolerance * top || k < m || std::abs(top - theta) <= options.tolerance * top;
      theta = top;
      if (done) break;
    }
    return std::sqrt(theta);
  }

  std::vector<EigenPair> dense_eigenvalues(int count, cd shift) const {
    Eigen::EigenSolver<Dense> es(B, true);
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver did not converge");
    std::vector<EigenPair> pairs;
    const DenseC vecs = es.eigenvectors();
    const DenseC Bc = B.cast<cd>();
    for (int i = 0; i < n; ++i) {
      const cd value = es.eigenvalues()(i);
      const ComplexVector y = vecs.col(i);
      const double residual = (Bc * y - value * y).norm() / y.norm();
      pairs.push_back({value, residual, residual_ok(residual, value)});
    }
    sort_pairs(pairs, shift);
    if (count > 0 && count < static_cast<int>(pairs.size())) pairs.resize(count);
    return pairs;
  }

  // Shift-invert Arnoldi on (B - shift)^{-1} = F^T (A - shift)^{-1} F^{-T} with explicit restarts.
  std::vector<EigenPair> sparse_eigenvalues(int count, cd shift) const {
    if (count <= 0) throw ValidationError("the iterative eigensolver needs a positive count");
    count = std::min(count, n);
    Eigen::SparseLU<ComplexSparse> lu;
    const ComplexSparse S = shifted(A, shift);
    lu.analyzePattern(S);
    lu.factorize(S);
    if (lu.info() != Eigen::Success) throw NumericalError("shift is an eigenvalue or the shifted system is singular");
    // (B - shift)^{-1} y = -F^T (shift - A)^{-1} F^{-T} y
    auto apply = [&](const ComplexVector& y) -> ComplexVector { return -apply_F_T(lu.solve(apply_F_inv_T(y))); };

    const int m = std::min(n, std::max(2 * count + 20, 40));
    ComplexVector v = start_vector(n, 0xa5a5);
    std::vector<EigenPair> best;
    for (int restart = 0; restart < options.max_iterations; ++restart) {
      DenseC V(n, m + 1);
      DenseC H = DenseC::Zero(m + 1, m);
      V.col(0) = v;
      int k = 0;
      for (; k < m; ++k) {
        ComplexVector w = apply(V.col(k));
        for (int pass = 0; pass < 2; ++pass) {
          const ComplexVector h = V.leftCols(k + 1).adjoint() * w;
          w -= V.leftCols(k + 1) * h;
          H.col(k).head(k + 1) += h;
        }
        H(k + 1, k) = w.norm();
        if (std::abs(H(k + 1, k)) <= 1e-14) {
          ++k;
          break;
        }
        V.col(k + 1) = w / H(k + 1, k);
      }
      Eigen::ComplexEigenSolver<DenseC> ces(H.topLeftCorner(k, k));
      std::vector<int> order(k);
      for (int i = 0; i < k; ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(ces.eigenvalues()(a)) > std::abs(ces.eigenvalues()(b));
      });
      const int take = std::min(count, k);
      std::vector<EigenPair> pairs;
      ComplexVector next = ComplexVector::Zero(n);
      bool all_ok = true;
      for (int r = 0; r < take; ++r) {
        const cd theta = ces.eigenvalues()(order[r]);
        const ComplexVector y = V.leftCols(k) * ces.eigenvectors().col(order[r]);
        const cd value = shift + 1.0 / theta;
        const double residual = (apply_B(y) - value * y).norm() / y.norm();
        const bool ok = residual <= options.tolerance * std::max(1.0, std::abs(value));
        all_ok = all_ok && ok;
        pairs.push_back({value, residual, residual_ok(residual, value)});
        next += y / y.norm();
      }
      best = std::move(pairs);
      if (all_ok || k < m) break;
      v = next / next.norm();
    }
    sort_pairs(best, shift);
    return best;
  }
};

SpectralContext::SpectralContext(const GeneratorAssembly& assembly, SpectralOptions options)
    : impl_(std::make_unique<Impl>()) {
  auto& I = *impl_;
  I.options = options;
  I.A = assembly.A;
  I.n = static_cast<int>(assembly.A.rows());
  I.dense = I.n <= options.dense_limit;
  if (I.dense) {
    const Dense M(assembly.M);
    Eigen::LLT<Dense> llt(M);
    if (llt.info() != Eigen::Success) throw NumericalError("Cholesky factorization of the Gram matrix failed");
    const Dense L = llt.matrixL();
    const Dense Linv_T = L.transpose().triangularView<Eigen::Upper>().solve(Dense::Identity(I.n, I.n));
    I.B = L.transpose() * (Dense(assembly.A) * Linv_T);
  } else {
    I.llt.compute(assembly.M);
    if (I.llt.info() != Eigen::Success) throw NumericalError("Cholesky factorization of the Gram matrix failed");
  }
}

SpectralContext::~SpectralContext() = default;
SpectralContext::SpectralContext(SpectralContext&&) noexcept = default;
SpectralContext& SpectralContext::operator=(SpectralContext&&) noexcept = default;

int SpectralContext::size() const { return impl_->n; }
bool SpectralContext::dense() const { return impl_->dense; }
const SpectralOptions& SpectralContext::options() const { return impl_->options; }

std::vector<EigenPair> SpectralContext::eigenvalues(int count, std::complex<double> shift) const {
  return impl_->dense ? impl_->dense_eigenvalues(count, shift) : impl_->sparse_eigenvalues(count, shift);
}

double SpectralContext::resolvent_norm(double lambda) const {
  if (!std::isfinite(lambda)) throw ValidationError("lambda must be finite");
  return impl_->dense ? impl_->dense_resolvent(lambda) : impl_->sparse_resolvent(lambda);
}

std::vector<EigenPair> eigenvalues(const GeneratorAssembly& assembly, int count, std::complex<double> shift,
                                   const SpectralOptions& options) {
  return SpectralContext(assembly, options).eigenvalues(count, shift);
}

double resolvent_norm(const GeneratorAssembly& assembly, double lambda, const SpectralOptions& options) {
  return SpectralContext(assembly, options).resolvent_norm(lambda);
}

double top_decade_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty()) throw ValidationError("slope needs matching non-empty series");
  const double cut = x.back() / 10.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < cut * (1 - 1e-12)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++k;
  }
  if (k < 2) throw ValidationError("top decade holds fewer than two points");
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

ResolventScan resolvent_scan(const SpectralContext& context, double lambda_min, double lambda_max, int n_points,
                             int threads, double p) {
  if (!(lambda_min > 0.0 && lambda_max > lambda_min)) throw ValidationError("need 0 < lambda_min < lambda_max");
  if (n_points < 2) throw ValidationError("a scan needs at least two points");
  ResolventScan scan;
  scan.p = p;
  scan.lambdas.resize(n_points);
  const double ratio = std::log(lambda_max / lambda_min);
  for (int i = 0; i < n_points; ++i)
    scan.lambdas[i] = i + 1 == n_points ? lambda_max : lambda_min * std::exp(ratio * i / (n_points - 1));
  scan.norms.assign(n_points, 0.0);

  const int workers = std::clamp(threads, 1, n_points);
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](int w) {
    try {
      for (int i = next++; i < n_points; i = next++) scan.norms[i] = context.resolvent_norm(scan.lambdas[i]);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  const double flag = context.options().near_singular;
  scan.scaled.resize(n_points);
  scan.near_singular.resize(n_points);
  for (int i = 0; i < n_points; ++i) {
    scan.scaled[i] = std::pow(scan.lambdas[i], -p) * scan.norms[i];
    scan.near_singular[i] = !(scan.norms[i] <= flag);
    if (scan.scaled[i] > scan.sup_scaled) {
      scan.sup_scaled = scan.scaled[i];
      scan.sup_scaled_at = scan.lambdas[i];
    }
  }
  scan.fit_exponent = top_decade_slope(scan.lambdas, scan.norms);
  return scan;
}

ResolventScan resolvent_scan(const GeneratorAssembly& assembly, double lambda_min, double lambda_max, int n_points,
                             int threads, const SpectralOptions& options) {
  SpectralContext context(assembly, options);
  return resolvent_scan(context, lambda_min, lambda_max, n_points, threads);
}

std::string scan_csv(const ResolventScan& scan) {
  std::string out = "lambda,norm,scaled_norm\n";
  for (std::size_t i = 0; i < scan.lambdas.size(); ++i) out += csv_row({scan.lambdas[i], scan.norms[i], scan.scaled[i]});
  return out;
}

std::string spectrum_csv(const std::vector<EigenPair>& pairs) {
  std::string out = "re,im,residual\n";
  for (const auto& pr : pairs) out += csv_row({pr.value.real(), pr.value.imag(), pr.residual});
  return out;
}

}  // namespace ptl
