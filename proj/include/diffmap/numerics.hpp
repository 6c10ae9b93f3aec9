#pragma once

// Dense numerical kernels shared by every reducer: the validated point
// matrix, pairwise squared distances, symmetric eigenpairs and a portable
// seeded random stream.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace diffmap {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised for every rejected precondition in the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// parallelism

/// Worker count, capped by MANIFOLD_THREADS when set.
inline unsigned thread_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MANIFOLD_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) n = static_cast<unsigned>(v);
  }
  return n;
}

/// Runs fn(i) for i in [0, count) over contiguous chunks. Each index is
/// handled by exactly one worker, so results written per index do not depend
/// on the thread count.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// DataMatrix

/// n x D matrix of finite feature values, one point per row. Row order is the
/// point identity used by every derived matrix.
class DataMatrix {
 public:
  DataMatrix() = default;

  explicit DataMatrix(Matrix values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 1)
      throw Error("data matrix must have at least one row and one column");
    for (Eigen::Index i = 0; i < values_.rows(); ++i)
      for (Eigen::Index c = 0; c < values_.cols(); ++c)
        if (!std::isfinite(values_(i, c)))
          throw Error("non-finite value in row " + std::to_string(i) + ", column " +
                      std::to_string(c));
  }

  static DataMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty())
      throw Error("data matrix must have at least one row and one column");
    Matrix m(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.front().size())
        throw Error("row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                    " columns, expected " + std::to_string(rows.front().size()));
      for (std::size_t c = 0; c < rows[i].size(); ++c)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    }
    return DataMatrix(std::move(m));
  }

  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }
  const Matrix& values() const { return values_; }
  auto row(Eigen::Index i) const { return values_.row(i); }

 private:
  Matrix values_;
};

/// Stacks two point sets sharing an ambient dimension.
inline DataMatrix vstack(const DataMatrix& top, const DataMatrix& bottom) {
  if (top.cols() != bottom.cols())
    throw Error("cannot stack matrices with " + std::to_string(top.cols()) + " and " +
                std::to_string(bottom.cols()) + " columns");
  Matrix m(top.rows() + bottom.rows(), top.cols());
  m.topRows(top.rows()) = top.values();
  m.bottomRows(bottom.rows()) = bottom.values();
  return DataMatrix(std::move(m));
}

// ---------------------------------------------------------------------------
// distances

/// Squared Euclidean distance between every pair of rows. Each entry is a
/// plain left-to-right sum over columns, so the result is bit-identical for
/// any thread count.
inline Matrix pairwise_sq_dists(const DataMatrix& data) {
  const Eigen::Index n = data.rows();
  const Eigen::Index dim = data.cols();
  // column-major copy with one point per column keeps the inner loop contiguous
  const Matrix points = data.values().transpose();
  Matrix out(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t ui) {
    const auto i = static_cast<Eigen::Index>(ui);
    const double* a = points.col(i).data();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) {
        out(i, j) = 0.0;
        continue;
      }
      const double* b = points.col(j).data();
      double s = 0.0;
      for (Eigen::Index c = 0; c < dim; ++c) {
        const double diff = a[c] - b[c];
        s += diff * diff;
      }
      out(i, j) = s;
    }
  });
  return out;
}

/// Squared distances from every row of `queries` to every row of `reference`.
inline Matrix cross_sq_dists(const DataMatrix& queries, const DataMatrix& reference) {
  if (queries.cols() != reference.cols())
    throw Error("dimension mismatch: " + std::to_string(queries.cols()) + " vs " +
                std::to_string(reference.cols()));
  const Matrix q = queries.values().transpose();
  const Matrix r = reference.values().transpose();
  Matrix out(queries.rows(), reference.rows());
  parallel_for(static_cast<std::size_t>(queries.rows()), [&](std::size_t ui) {
    const auto i = static_cast<Eigen::Index>(ui);
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < q.rows(); ++c) {
        const double diff = q(c, i) - r(c, j);
        s += diff * diff;
      }
      out(i, j) = s;
    }
  });
  return out;
}

/// Indices of the k smallest entries of `dists`, skipping `exclude`. Equal
/// distances keep the lower index first.
inline std::vector<Eigen::Index> nearest_indices(const Eigen::Ref<const Vector>& dists,
                                                 std::size_t k, Eigen::Index exclude = -1) {
  std::vector<Eigen::Index> idx;
  idx.reserve(static_cast<std::size_t>(dists.size()));
  for (Eigen::Index j = 0; j < dists.size(); ++j)
    if (j != exclude) idx.push_back(j);
  k = std::min(k, idx.size());
  auto closer = [&](Eigen::Index a, Eigen::Index b) {
    return dists(a) < dists(b) || (dists(a) == dists(b) && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    closer);
  idx.resize(k);
  return idx;
}

// ---------------------------------------------------------------------------
// eigenpairs

/// Eigenvalues sorted descending; column j of `eigenvectors` pairs with
/// eigenvalue j, has unit norm, and its largest-magnitude entry is
/// non-negative.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;
};

/// Largest absolute asymmetry relative to the matrix scale.
inline double relative_asymmetry(const Matrix& a) {
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

/// Flips v so that its largest-magnitude entry (first one on ties) is >= 0.
inline void fix_sign(Eigen::Ref<Vector> v) {
  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > best) {
      best = std::abs(v(i));
      arg = i;
    }
  }
  if (v(arg) < 0) v = -v;
}

/// The `count` algebraically largest eigenpairs of a symmetric matrix, via
/// Householder tridiagonalization followed by implicit symmetric QR.
/// Exactly equal eigenvalues keep the solver's column order.
inline SpectralDecomposition top_eigenpairs(const Matrix& a, Eigen::Index count) {
  if (a.rows() != a.cols())
    throw Error("eigenproblem needs a square matrix, got " + std::to_string(a.rows()) + "x" +
                std::to_string(a.cols()));
  const Eigen::Index n = a.rows();
  if (count < 1 || count > n)
    throw Error("requested " + std::to_string(count) + " eigenpairs of a " + std::to_string(n) +
                "x" + std::to_string(n) + " matrix");
  if (!a.allFinite()) throw Error("eigenproblem input contains non-finite entries");
  const double asym = relative_asymmetry(a);
  if (asym > 1e-10)
    throw Error("eigenproblem input is not symmetric (relative asymmetry " +
                std::to_string(asym) + ")");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw Error("symmetric eigensolver did not converge");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Vector& values = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return values(x) > values(y); });

  SpectralDecomposition out;
  out.eigenvalues.resize(count);
  out.eigenvectors.resize(n, count);
  for (Eigen::Index j = 0; j < count; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    out.eigenvalues(j) = values(src);
    out.eigenvectors.col(j) = solver.eigenvectors().col(src).normalized();
    fix_sign(out.eigenvectors.col(j));
  }
  return out;
}

/// The `count` algebraically smallest eigenpairs, ascending, obtained from
/// the top eigenpairs of (shift * I - A) with a Gershgorin shift.
inline SpectralDecomposition bottom_eigenpairs(const Matrix& a, Eigen::Index count) {
  if (a.rows() != a.cols()) throw Error("eigenproblem needs a square matrix");
  const double shift = a.cwiseAbs().rowwise().sum().maxCoeff();
  Matrix shifted = -a;
  shifted.diagonal().array() += shift;
  SpectralDecomposition top = top_eigenpairs(shifted, count);
  top.eigenvalues = (shift - top.eigenvalues.array()).matrix();
  return top;
}

// ---------------------------------------------------------------------------
// randomness

/// Seeded stream with a platform-independent definition: the 64-bit Mersenne
/// Twister engine (fully specified by the standard) plus hand-rolled
/// transforms, since the standard distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via the Box-Muller transform.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Unbiased integer in [0, n).
  std::uint64_t index(std::uint64_t n) {
    if (n == 0) throw Error("cannot draw an index from an empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  /// Fisher-Yates shuffle driven by index().
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline Rng seeded_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace diffmap
