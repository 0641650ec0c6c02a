#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "sbfl/rng.hpp"
#include "sbfl/types.hpp"

namespace sbfl::data {

// One device's regression data: X is M x N stored row-major by coordinate,
// targets z have unit variance, a is the device's feature-scale draw.
struct DeviceDataset {
  int M = 0;
  int N = 0;
  double a = 0.0;
  std::vector<double> X;  // M * N
  std::vector<double> z;  // N

  double x(int m, int n) const { return X[static_cast<size_t>(m) * N + n]; }
};

// Heterogeneous: a_k ~ U(0,5) per device; homogeneous(a): all devices share
// the given scale. X entries ~ N(0, a_k) (variance a_k), z entries ~ N(0,1).
// Device k's data depends only on (seed, k), so growing K never perturbs
// existing devices.
std::vector<DeviceDataset> gen_synthetic(int K, int N_k, int M,
                                         std::optional<double> homogeneous_a,
                                         std::uint64_t seed);

// Splits each class's indices into K equal chunks (remainder to the last
// chunk) and assigns each device chunks_per_user chunks from distinct
// classes, no chunk reused. Throws std::invalid_argument when infeasible.
std::vector<std::vector<int>> chunk_partition(const std::vector<int>& labels,
                                              int K, int chunks_per_user,
                                              RandomStream& rng);

// Tiny labeled point set (4 Gaussian blobs by default) for exercising the
// partitioner on something shaped like a classification set.
struct BlobSet {
  std::vector<std::array<double, 2>> points;
  std::vector<int> labels;
};
BlobSet make_blobs(int classes = 4, int per_class = 100, std::uint64_t seed = 0);

// Monte Carlo check of the cross-device gradient correlation identity
// E[g_k g_l^T] = 4 R_k w w^T R_l  (k != l, single-column X per trial,
// factor-2 gradients applied on both sides). Returns the max entrywise
// deviation relative to max|prediction|, or the absolute deviation when the
// prediction is identically zero.
double gradient_correlation_check(const Eigen::MatrixXd& R_k,
                                  const Eigen::MatrixXd& R_l,
                                  const Eigen::VectorXd& w,
                                  std::int64_t n_trials, std::uint64_t seed);

// Little-endian binary round trip: "SBFLDAT1", u32 K, then per device
// u32 M, u32 N, f64 a, f64 X (row-major), f64 z.
void save_datasets(const std::string& path,
                   const std::vector<DeviceDataset>& devices);
std::vector<DeviceDataset> load_datasets(const std::string& path);

}  // namespace sbfl::data
