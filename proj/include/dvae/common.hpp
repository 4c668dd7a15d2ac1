#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dvae {

inline constexpr const char* kToolkitVersion = "0.1.0";

// Batches are stored one sample per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Caller supplied something that violates a documented precondition
/// (bad shape, bad file, bad configuration). Maps to a usage error in the CLI.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced or received non-finite values, or a
/// factorization failed at run time.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string shape_string(const Matrix& m);

/// Throws InvalidArgument naming `what` unless m is rows x cols.
void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& what);

bool all_finite(const Matrix& m);

/// log(sum(exp(v))) with the max shifted out; -inf for an empty range.
double log_sum_exp(std::span<const double> values);

/// Compensated (Neumaier) summation.
class CompensatedSum {
 public:
  void add(double value);
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// log N(x; mean, exp(log_var)).
inline double log_normal_density(double x, double mean, double log_var) {
  const double diff = x - mean;
  return -0.5 * (kLog2Pi + log_var + diff * diff * std::exp(-log_var));
}

/// Derives an independent 64-bit seed for sub-task `index` of a run seeded
/// with `seed` (splitmix64 finalizer over the pair).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// Runs fn(i) for i in [0, n) over a fixed static partition of worker
/// threads. fn must only write to state owned by index i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace dvae
