#include "dermo/sparse.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "dermo/errors.hpp"
#include "dermo/random.hpp"

namespace dermo::sparse {
namespace {

using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

constexpr char kMagic[8] = {'D', 'R', 'M', 'D', 'I', 'C', 'T', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[off + i]) << (8 * i);
  return v;
}

std::uint32_t colorspace_code(ColorSpace cs) {
  switch (cs) {
    case ColorSpace::RGB: return 0;
    case ColorSpace::HSV: return 1;
    case ColorSpace::RGBHSV6: return 2;
    case ColorSpace::GRAY: return 3;
  }
  return 0;
}

}  // namespace

Dictionary::Dictionary(int atom_dim, int n_atoms, ColorSpace cs, int patch_side,
                       std::vector<double> atoms)
    : atom_dim_(atom_dim), n_atoms_(n_atoms), colorspace_(cs), patch_side_(patch_side),
      atoms_(std::move(atoms)) {
  detail::require(atom_dim > 0 && n_atoms > 0 && patch_side > 0, "dictionary sizes must be positive");
  detail::require(atom_dim == patch_side * patch_side * channel_count(cs),
                  "atom_dim must equal patch_side^2 * channels");
  detail::require(atoms_.size() == std::size_t(atom_dim) * n_atoms,
                  "atom storage must hold atom_dim * n_atoms values");
  for (int j = 0; j < n_atoms; ++j) {
    double sq = 0.0;
    for (double v : atom(j)) sq += v * v;
    detail::require(std::sqrt(sq) <= 1.0 + 1e-9, "atoms must lie in the unit L2 ball");
  }
}

std::vector<double> SparseCode::dense(int n_atoms) const {
  std::vector<double> out(std::size_t(n_atoms), 0.0);
  for (std::size_t i = 0; i < indices.size(); ++i) out[std::size_t(indices[i])] = coefficients[i];
  return out;
}

std::vector<std::vector<double>> extract_patches(const ImageTensor& img, int side, int stride) {
  detail::require(side >= 1 && stride >= 1, "patch side and stride must be positive");
  detail::require(side <= img.width() && side <= img.height(), "patch side exceeds image size");
  std::vector<std::vector<double>> patches;
  for (int y0 = 0; y0 + side <= img.height(); y0 += stride) {
    for (int x0 = 0; x0 + side <= img.width(); x0 += stride) {
      std::vector<double> p;
      p.reserve(std::size_t(side) * side * img.channels());
      for (int c = 0; c < img.channels(); ++c)
        for (int y = 0; y < side; ++y)
          for (int x = 0; x < side; ++x) p.push_back(img.at(c, y0 + y, x0 + x));
      double mean = 0.0;
      for (double v : p) mean += v;
      mean /= double(p.size());
      // Summation rounding would otherwise leave flat patches slightly off zero.
      if (std::all_of(p.begin(), p.end(), [&](double v) { return v == p.front(); })) mean = p.front();
      for (double& v : p) v -= mean;
      patches.push_back(std::move(p));
    }
  }
  return patches;
}

struct LassoSolver::Impl {
  Eigen::MatrixXd gram;
};

LassoSolver::LassoSolver(const Dictionary& dict) : dict_(dict), impl_(std::make_unique<Impl>()) {
  const ConstMatMap d(dict_.atoms().data(), dict_.atom_dim(), dict_.n_atoms());
  impl_->gram.noalias() = d.transpose() * d;
}

LassoSolver::~LassoSolver() = default;
LassoSolver::LassoSolver(LassoSolver&&) noexcept = default;
LassoSolver& LassoSolver::operator=(LassoSolver&&) noexcept = default;

SparseCode LassoSolver::encode(std::span<const double> x, const LassoOptions& opts) const {
  detail::require(int(x.size()) == dict_.atom_dim(), "signal dimension differs from atom_dim");
  detail::require(opts.lambda > 0.0, "lambda must be positive");
  const int k = dict_.n_atoms();
  const double lambda = opts.lambda;
  const ConstMatMap d(dict_.atoms().data(), dict_.atom_dim(), k);
  const Eigen::MatrixXd& g = impl_->gram;
  const Eigen::VectorXd corr = d.transpose() * ConstVecMap(x.data(), Eigen::Index(x.size()));

  Eigen::VectorXd a = Eigen::VectorXd::Zero(k);
  // r = D^T (x - D a), maintained incrementally between exact refreshes.
  Eigen::VectorXd r = corr;
  std::vector<int> active;

  auto update = [&](int j) {
    const double gjj = g(j, j);
    if (gjj <= 0.0) return;
    const double old = a[j];
    const double fresh = soft_threshold(r[j] + gjj * old, lambda) / gjj;
    if (fresh != old) {
      r.noalias() -= g.col(j) * (fresh - old);
      a[j] = fresh;
    }
  };
  auto refresh = [&] {
    active.clear();
    r = corr;
    for (int j = 0; j < k; ++j)
      if (a[j] != 0.0) {
        active.push_back(j);
        r.noalias() -= g.col(j) * a[j];
      }
  };
  auto violation = [&](int j) {
    if (a[j] > 0.0) return std::abs(r[j] - lambda);
    if (a[j] < 0.0) return std::abs(r[j] + lambda);
    return std::max(0.0, std::abs(r[j]) - lambda);
  };

  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    for (int j = 0; j < k; ++j) update(j);
    refresh();
    double worst = 0.0;
    for (int j = 0; j < k; ++j) worst = std::max(worst, violation(j));
    if (worst <= opts.tolerance) break;
    // Polish the active set before the next full sweep.
    for (int inner = 0; inner < 1000 && !active.empty(); ++inner) {
      for (int j : active) update(j);
      refresh();
      double w = 0.0;
      for (int j : active) w = std::max(w, violation(j));
      if (w <= 0.1 * opts.tolerance) break;
    }
  }

  SparseCode code;
  for (int j = 0; j < k; ++j)
    if (a[j] != 0.0) {
      code.indices.push_back(j);
      code.coefficients.push_back(a[j]);
    }
  return code;
}

SparseCode lasso_encode(std::span<const double> x, const Dictionary& dict, double lambda) {
  LassoOptions opts;
  opts.lambda = lambda;
  return LassoSolver(dict).encode(x, opts);
}

double lasso_objective(std::span<const double> x, const Dictionary& dict, const SparseCode& code,
                       double lambda) {
  detail::require(int(x.size()) == dict.atom_dim(), "signal dimension differs from atom_dim");
  std::vector<double> resid(x.begin(), x.end());
  double l1 = 0.0;
  for (std::size_t i = 0; i < code.indices.size(); ++i) {
    const auto atom = dict.atom(code.indices[i]);
    for (std::size_t m = 0; m < resid.size(); ++m) resid[m] -= atom[m] * code.coefficients[i];
    l1 += std::abs(code.coefficients[i]);
  }
  double sq = 0.0;
  for (double v : resid) sq += v * v;
  return 0.5 * sq + lambda * l1;
}

namespace {
// Atoms this close to an earlier atom (in absolute cosine) are treated as stale.
constexpr double kDuplicateCosine = 0.99;
}  // namespace

Dictionary learn_dictionary(std::span<const std::vector<double>> patches, ColorSpace cs,
                            int patch_side, const LearnOptions& opts, LearnTrace* trace) {
  detail::require(opts.n_atoms >= 1, "n_atoms must be positive");
  detail::require(opts.iterations >= 1, "iterations must be at least 1");
  detail::require(opts.batch_size >= 1, "batch_size must be at least 1");
  detail::require(opts.lambda > 0.0, "lambda must be positive");
  detail::require(patches.size() >= std::size_t(opts.n_atoms),
                  "need at least as many patches as atoms");
  const int m = int(patches.front().size());
  const int k = opts.n_atoms;
  for (const auto& p : patches) detail::require(int(p.size()) == m, "patches differ in length");
  const std::size_t n = patches.size();

  Rng rng(opts.seed);
  auto unit_sample = [&](std::size_t idx, Eigen::Ref<Eigen::VectorXd> out) {
    const ConstVecMap p(patches[idx].data(), m);
    const double norm = p.norm();
    if (norm <= 1e-12) return false;
    out = p / norm;
    return true;
  };
  auto random_unit = [&](Eigen::Ref<Eigen::VectorXd> out) {
    for (int i = 0; i < m; ++i) out[i] = rng.uniform(-1.0, 1.0);
    out /= out.norm();
  };

  Eigen::MatrixXd dmat(m, k);
  {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    int filled = 0;
    for (std::size_t i = 0; i < n && filled < k; ++i)
      if (unit_sample(order[i], dmat.col(filled))) ++filled;
    for (; filled < k; ++filled) random_unit(dmat.col(filled));
  }

  Eigen::MatrixXd a_stat = Eigen::MatrixXd::Zero(k, k);
  Eigen::MatrixXd b_stat = Eigen::MatrixXd::Zero(m, k);
  double fixed_part = 0.0;  // 0.5 sum |x|^2 + lambda sum |a|_1
  double seen = 0.0;
  std::vector<int> last_used(std::size_t(k), 0);

  auto surrogate = [&](const Eigen::MatrixXd& dm) {
    const Eigen::MatrixXd dtd = dm.transpose() * dm;
    const double quad = 0.5 * (dtd.cwiseProduct(a_stat)).sum();
    const double lin = (dm.cwiseProduct(b_stat)).sum();
    return (fixed_part + quad - lin) / seen;
  };

  LassoOptions lasso;
  lasso.lambda = opts.lambda;
  std::vector<std::size_t> batch(std::size_t(opts.batch_size));
  std::vector<double> residual(batch.size());
  for (int t = 1; t <= opts.iterations; ++t) {
    const Dictionary current(m, k, cs, patch_side,
                             std::vector<double>(dmat.data(), dmat.data() + dmat.size()));
    const LassoSolver solver(current);
    for (auto& idx : batch) idx = rng.index(n);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto& x = patches[batch[b]];
      const SparseCode code = solver.encode(x, lasso);
      const ConstVecMap xv(x.data(), m);
      Eigen::VectorXd r = xv;
      for (std::size_t p = 0; p < code.indices.size(); ++p) r -= dmat.col(code.indices[p]) * code.coefficients[p];
      residual[b] = r.squaredNorm();
      fixed_part += 0.5 * xv.squaredNorm();
      for (std::size_t p = 0; p < code.indices.size(); ++p) {
        const int i = code.indices[p];
        const double ai = code.coefficients[p];
        fixed_part += opts.lambda * std::abs(ai);
        last_used[std::size_t(i)] = t;
        b_stat.col(i).noalias() += xv * ai;
        for (std::size_t q = 0; q < code.indices.size(); ++q)
          a_stat(i, code.indices[q]) += ai * code.coefficients[q];
      }
      seen += 1.0;
    }

    if (trace) trace->surrogate_before.push_back(surrogate(dmat));
    for (int j = 0; j < k; ++j) {
      const double ajj = a_stat(j, j);
      if (ajj < 1e-12) continue;
      Eigen::VectorXd u = dmat.col(j) + (b_stat.col(j) - dmat * a_stat.col(j)) / ajj;
      dmat.col(j) = u / std::max(1.0, u.norm());
    }
    if (trace) trace->surrogate_after.push_back(surrogate(dmat));

    // Stale atoms take over the worst-reconstructed samples of this batch.
    std::vector<std::size_t> worst(batch.size());
    for (std::size_t b = 0; b < worst.size(); ++b) worst[b] = b;
    std::stable_sort(worst.begin(), worst.end(), [&](std::size_t a, std::size_t b) { return residual[a] > residual[b]; });
    std::size_t next = 0;
    for (int j = 0; j < k; ++j) {
      bool duplicate = false;
      for (int i = 0; i < j && !duplicate; ++i) duplicate = std::abs(dmat.col(i).dot(dmat.col(j))) > kDuplicateCosine;
      if (!duplicate && t - last_used[std::size_t(j)] < opts.stale_after) continue;
      bool ok = false;
      while (!ok && next < worst.size()) ok = unit_sample(batch[worst[next++]], dmat.col(j));
      if (!ok) random_unit(dmat.col(j));
      a_stat.row(j).setZero();
      a_stat.col(j).setZero();
      b_stat.col(j).setZero();
      last_used[std::size_t(j)] = t;
    }
  }
  return Dictionary(m, k, cs, patch_side, std::vector<double>(dmat.data(), dmat.data() + dmat.size()));
}

features::FeatureVector encode_image(const ImageTensor& img, const LassoSolver& solver,
                                     double lambda) {
  const Dictionary& dict = solver.dictionary();
  detail::require(img.colorspace() == dict.colorspace(), "image colorspace differs from dictionary");
  const ImageTensor sized = resize_bilinear(img, kEncodeSize, kEncodeSize);
  const auto patches = extract_patches(sized, dict.patch_side(), dict.patch_side());
  std::vector<double> pooled(std::size_t(dict.n_atoms()), 0.0);
  LassoOptions opts;
  opts.lambda = lambda;
  for (const auto& p : patches) {
    const SparseCode code = solver.encode(p, opts);
    for (std::size_t i = 0; i < code.indices.size(); ++i)
      pooled[std::size_t(code.indices[i])] += std::abs(code.coefficients[i]);
  }
  for (double& v : pooled) v /= double(patches.size());
  const char* name = dict.colorspace() == ColorSpace::GRAY ? "sc_gray" : "sc_rgb";
  return {name, std::move(pooled)};
}

features::FeatureVector encode_image(const ImageTensor& img, const Dictionary& dict, double lambda) {
  return encode_image(img, LassoSolver(dict), lambda);
}

std::vector<std::uint8_t> serialize(const Dictionary& dict) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, std::uint32_t(dict.atom_dim()));
  put_u32(out, std::uint32_t(dict.n_atoms()));
  put_u32(out, colorspace_code(dict.colorspace()));
  put_u32(out, std::uint32_t(dict.patch_side()));
  out.reserve(out.size() + dict.atoms().size() * 8);
  for (double v : dict.atoms()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(bits >> (8 * i)));
  }
  return out;
}

Dictionary deserialize(std::span<const std::uint8_t> bytes) {
  constexpr std::size_t kHeader = 8 + 4 * 4;
  if (bytes.size() < kHeader || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw DecodeError(0, "not a dictionary file");
  }
  const auto atom_dim = get_u32(bytes, 8);
  const auto n_atoms = get_u32(bytes, 12);
  const auto cs_code = get_u32(bytes, 16);
  const auto side = get_u32(bytes, 20);
  if (cs_code > 3) throw DecodeError(16, "unknown colorspace code");
  static constexpr ColorSpace kSpaces[] = {ColorSpace::RGB, ColorSpace::HSV, ColorSpace::RGBHSV6,
                                           ColorSpace::GRAY};
  const std::size_t count = std::size_t(atom_dim) * n_atoms;
  if ((bytes.size() - kHeader) / 8 < count) throw DecodeError(bytes.size(), "truncated atom data");
  std::vector<double> atoms(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t(bytes[kHeader + i * 8 + b]) << (8 * b);
    atoms[i] = std::bit_cast<double>(bits);
  }
  return Dictionary(int(atom_dim), int(n_atoms), kSpaces[cs_code], int(side), std::move(atoms));
}

void save_dictionary(const std::filesystem::path& path, const Dictionary& dict) {
  const auto bytes = serialize(dict);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

Dictionary load_dictionary(const std::filesystem::path& path) {
  return deserialize(read_file_bytes(path));
}

}  // namespace dermo::sparse
