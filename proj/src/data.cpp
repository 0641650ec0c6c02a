#include "sbfl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

namespace sbfl::data {
namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

constexpr char kMagic[8] = {'S', 'B', 'F', 'L', 'D', 'A', 'T', '1'};

}  // namespace

std::vector<DeviceDataset> gen_synthetic(int K, int N_k, int M,
                                         std::optional<double> homogeneous_a,
                                         std::uint64_t seed) {
  if (K < 1 || N_k < 1 || M < 1)
    throw std::invalid_argument("dataset shape must be positive");
  if (homogeneous_a && !(*homogeneous_a > 0.0))
    throw std::invalid_argument("feature scale must be positive");
  std::vector<DeviceDataset> out(static_cast<size_t>(K));
  for (int k = 0; k < K; ++k) {
    auto dev = static_cast<std::uint64_t>(k);
    DeviceDataset& d = out[static_cast<size_t>(k)];
    d.M = M;
    d.N = N_k;
    if (homogeneous_a) {
      d.a = *homogeneous_a;
    } else {
      RandomStream as(seed, StreamPurpose::data_scale, dev);
      d.a = as.uniform(0.0, 5.0);
    }
    RandomStream xs(seed, StreamPurpose::data_matrix, dev);
    RandomStream zs(seed, StreamPurpose::data_labels, dev);
    double sd = std::sqrt(d.a);  // a is a variance
    d.X.resize(static_cast<size_t>(M) * static_cast<size_t>(N_k));
    for (double& v : d.X) v = sd * xs.gaussian();
    d.z.resize(static_cast<size_t>(N_k));
    for (double& v : d.z) v = zs.gaussian();
  }
  return out;
}

std::vector<std::vector<int>> chunk_partition(const std::vector<int>& labels,
                                              int K, int chunks_per_user,
                                              RandomStream& rng) {
  if (K < 1) throw std::invalid_argument("need at least one device");
  if (chunks_per_user < 1) throw std::invalid_argument("need at least one chunk per device");
  if (labels.empty()) throw std::invalid_argument("need labeled samples");

  // std::map keys keep the classes in sorted label order, deterministically.
  std::map<int, std::vector<int>> by_class;
  for (size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(static_cast<int>(i));
  int C = static_cast<int>(by_class.size());
  if (chunks_per_user > C)
    throw std::invalid_argument("fewer classes than chunks per device");

  // Each class is cut into K chunks (the last absorbs the remainder).
  struct ClassChunks {
    std::vector<std::vector<int>> chunks;
    int remaining = 0;
  };
  std::vector<ClassChunks> classes;
  classes.reserve(static_cast<size_t>(C));
  for (auto& [label, idx] : by_class) {
    if (static_cast<int>(idx.size()) < K)
      throw std::invalid_argument("every class needs at least K samples");
    ClassChunks cc;
    size_t base = idx.size() / static_cast<size_t>(K);
    size_t pos = 0;
    for (int j = 0; j < K; ++j) {
      size_t take = j + 1 == K ? idx.size() - pos : base;
      cc.chunks.emplace_back(idx.begin() + static_cast<long>(pos),
                             idx.begin() + static_cast<long>(pos + take));
      pos += take;
    }
    cc.remaining = K;
    classes.push_back(std::move(cc));
  }

  // Balanced greedy: each device draws its classes uniformly among those
  // with the most chunks left, which keeps the supplies level and cannot
  // strand a device while chunks_per_user <= C.
  std::vector<std::vector<int>> assignment(static_cast<size_t>(K));
  for (int k = 0; k < K; ++k) {
    std::vector<int> chosen;
    for (int c = 0; c < chunks_per_user; ++c) {
      int best = 0;
      std::vector<int> pool;
      for (int cl = 0; cl < C; ++cl) {
        if (std::find(chosen.begin(), chosen.end(), cl) != chosen.end()) continue;
        int r = classes[static_cast<size_t>(cl)].remaining;
        if (r <= 0) continue;
        if (r > best) {
          best = r;
          pool.clear();
        }
        if (r == best) pool.push_back(cl);
      }
      if (pool.empty())
        throw std::invalid_argument("not enough chunks to cover every device");
      auto pick = static_cast<size_t>(rng.uniform() * static_cast<double>(pool.size()));
      if (pick >= pool.size()) pick = pool.size() - 1;
      int cl = pool[pick];
      chosen.push_back(cl);
      ClassChunks& cc = classes[static_cast<size_t>(cl)];
      auto chunk_pick =
          static_cast<size_t>(rng.uniform() * static_cast<double>(cc.remaining));
      if (chunk_pick >= static_cast<size_t>(cc.remaining)) chunk_pick = static_cast<size_t>(cc.remaining) - 1;
      // Chunks are consumed by swapping the picked one to the tail.
      std::swap(cc.chunks[chunk_pick], cc.chunks[static_cast<size_t>(cc.remaining) - 1]);
      const auto& chunk = cc.chunks[static_cast<size_t>(cc.remaining) - 1];
      assignment[static_cast<size_t>(k)].insert(assignment[static_cast<size_t>(k)].end(),
                                                chunk.begin(), chunk.end());
      --cc.remaining;
    }
    std::sort(assignment[static_cast<size_t>(k)].begin(),
              assignment[static_cast<size_t>(k)].end());
  }
  return assignment;
}

BlobSet make_blobs(int classes, int per_class, std::uint64_t seed) {
  if (classes < 1 || per_class < 1)
    throw std::invalid_argument("blob shape must be positive");
  BlobSet out;
  out.points.reserve(static_cast<size_t>(classes) * static_cast<size_t>(per_class));
  out.labels.reserve(out.points.capacity());
  for (int c = 0; c < classes; ++c) {
    double ang = 2.0 * M_PI * static_cast<double>(c) / classes;
    double cx = 5.0 * std::cos(ang);
    double cy = 5.0 * std::sin(ang);
    RandomStream rs(seed, StreamPurpose::placement, static_cast<std::uint64_t>(c));
    for (int i = 0; i < per_class; ++i) {
      out.points.push_back({cx + rs.gaussian(), cy + rs.gaussian()});
      out.labels.push_back(c);
    }
  }
  return out;
}

double gradient_correlation_check(const Eigen::MatrixXd& R_k,
                                  const Eigen::MatrixXd& R_l,
                                  const Eigen::VectorXd& w,
                                  std::int64_t n_trials, std::uint64_t seed) {
  auto M = w.size();
  if (M < 1 || M > 16) throw std::invalid_argument("dimension must be in [1, 16]");
  if (R_k.rows() != M || R_k.cols() != M || R_l.rows() != M || R_l.cols() != M)
    throw std::invalid_argument("covariances must match the weight dimension");
  if (n_trials < 1000) throw std::invalid_argument("need at least 1000 trials");

  // Symmetric square roots with eigenvalues clamped at zero, so PSD inputs
  // with rounding residue still factor.
  auto sqrt_of = [](const Eigen::MatrixXd& R) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
    if (es.info() != Eigen::Success)
      throw std::invalid_argument("covariance eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return Eigen::MatrixXd(es.eigenvectors() * ev.asDiagonal() *
                           es.eigenvectors().transpose());
  };
  Eigen::MatrixXd A_k = sqrt_of(R_k);
  Eigen::MatrixXd A_l = sqrt_of(R_l);

  RandomStream xs_k(seed, StreamPurpose::monte_carlo, 0);
  RandomStream xs_l(seed, StreamPurpose::monte_carlo, 1);
  RandomStream zs_k(seed, StreamPurpose::data_labels, 0);
  RandomStream zs_l(seed, StreamPurpose::data_labels, 1);

  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(M, M);
  Eigen::VectorXd u(M), v(M);
  for (std::int64_t t = 0; t < n_trials; ++t) {
    for (Eigen::Index i = 0; i < M; ++i) u(i) = xs_k.gaussian();
    for (Eigen::Index i = 0; i < M; ++i) v(i) = xs_l.gaussian();
    Eigen::VectorXd x_k = A_k * u;
    Eigen::VectorXd x_l = A_l * v;
    double z_k = zs_k.gaussian();
    double z_l = zs_l.gaussian();
    Eigen::VectorXd g_k = 2.0 * x_k * (x_k.dot(w) - z_k);
    Eigen::VectorXd g_l = 2.0 * x_l * (x_l.dot(w) - z_l);
    acc.noalias() += g_k * g_l.transpose();
  }
  Eigen::MatrixXd mean = acc / static_cast<double>(n_trials);
  Eigen::MatrixXd pred = 4.0 * (R_k * w) * (R_l * w).transpose();
  double denom = pred.cwiseAbs().maxCoeff();
  double dev = (mean - pred).cwiseAbs().maxCoeff();
  return denom > 0.0 ? dev / denom : dev;
}

void save_datasets(const std::string& path, const std::vector<DeviceDataset>& devices) {
  if (devices.empty()) throw std::invalid_argument("need at least one device");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.write(kMagic, 8);
  write_u32(os, static_cast<std::uint32_t>(devices.size()));
  for (const auto& d : devices) {
    write_u32(os, static_cast<std::uint32_t>(d.M));
    write_u32(os, static_cast<std::uint32_t>(d.N));
    write_f64(os, d.a);
    for (double v : d.X) write_f64(os, v);
    for (double v : d.z) write_f64(os, v);
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<DeviceDataset> load_datasets(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("not a device dataset file: " + path);
  std::uint32_t K = read_u32(is);
  if (!is || K == 0) throw std::runtime_error("corrupt dataset header: " + path);
  std::vector<DeviceDataset> out(K);
  for (auto& d : out) {
    d.M = static_cast<int>(read_u32(is));
    d.N = static_cast<int>(read_u32(is));
    d.a = read_f64(is);
    if (!is || d.M < 1 || d.N < 1)
      throw std::runtime_error("corrupt dataset record: " + path);
    d.X.resize(static_cast<size_t>(d.M) * static_cast<size_t>(d.N));
    for (double& v : d.X) v = read_f64(is);
    d.z.resize(static_cast<size_t>(d.N));
    for (double& v : d.z) v = read_f64(is);
    if (!is) throw std::runtime_error("truncated dataset file: " + path);
  }
  return out;
}

}  // namespace sbfl::data
