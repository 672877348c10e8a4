#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "dermo/features.hpp"
#include "dermo/imaging.hpp"

namespace dermo::sparse {

inline constexpr int kDefaultAtoms = 1024;
inline constexpr int kPatchSide = 8;
inline constexpr int kEncodeSize = 128;
inline constexpr double kDefaultLambda = 0.15;
inline constexpr int kDefaultIterations = 1000;
inline constexpr int kDefaultBatch = 256;

/// Column-major atom matrix; every atom lies in the unit L2 ball.
class Dictionary {
 public:
  Dictionary() = default;
  Dictionary(int atom_dim, int n_atoms, ColorSpace cs, int patch_side, std::vector<double> atoms);

  int atom_dim() const noexcept { return atom_dim_; }
  int n_atoms() const noexcept { return n_atoms_; }
  ColorSpace colorspace() const noexcept { return colorspace_; }
  int patch_side() const noexcept { return patch_side_; }
  std::span<const double> atoms() const noexcept { return atoms_; }
  std::span<const double> atom(int j) const {
    return std::span<const double>(atoms_).subspan(std::size_t(j) * atom_dim_, atom_dim_);
  }

  bool operator==(const Dictionary&) const = default;

 private:
  int atom_dim_ = 0;
  int n_atoms_ = 0;
  ColorSpace colorspace_ = ColorSpace::GRAY;
  int patch_side_ = kPatchSide;
  std::vector<double> atoms_;
};

/// Nonzero coefficients with strictly increasing atom indices.
struct SparseCode {
  std::vector<int> indices;
  std::vector<double> coefficients;

  std::vector<double> dense(int n_atoms) const;
};

/// Patches of side x side taken every `stride` pixels, flattened channel-major
/// (c, y, x) and shifted to zero mean over all their values.
std::vector<std::vector<double>> extract_patches(const ImageTensor& img, int side, int stride);

struct LassoOptions {
  double lambda = kDefaultLambda;
  /// Largest tolerated subgradient violation at the returned point.
  double tolerance = 1e-6;
  int max_sweeps = 100000;
};

/// Cyclic coordinate descent for min 0.5 |x - D a|^2 + lambda |a|_1, using a
/// precomputed Gram matrix. Reuse one solver for many signals.
class LassoSolver {
 public:
  explicit LassoSolver(const Dictionary& dict);
  ~LassoSolver();
  LassoSolver(LassoSolver&&) noexcept;
  LassoSolver& operator=(LassoSolver&&) noexcept;

  SparseCode encode(std::span<const double> x, const LassoOptions& opts = {}) const;
  const Dictionary& dictionary() const noexcept { return dict_; }

 private:
  struct Impl;
  Dictionary dict_;
  std::unique_ptr<Impl> impl_;
};

SparseCode lasso_encode(std::span<const double> x, const Dictionary& dict,
                        double lambda = kDefaultLambda);

/// 0.5 |x - D a|^2 + lambda |a|_1.
double lasso_objective(std::span<const double> x, const Dictionary& dict, const SparseCode& code,
                       double lambda);

struct LearnOptions {
  int n_atoms = kDefaultAtoms;
  double lambda = kDefaultLambda;
  int iterations = kDefaultIterations;
  int batch_size = kDefaultBatch;
  std::uint64_t seed = 0;
  /// An atom unused for this many consecutive mini-batches, or nearly
  /// collinear with an earlier atom, is replaced by a poorly reconstructed
  /// sample from the current batch and its statistics are cleared.
  int stale_after = 10;
};

/// Per iteration, the surrogate objective on that iteration's accumulated
/// statistics immediately before and after the dictionary update.
struct LearnTrace {
  std::vector<double> surrogate_before;
  std::vector<double> surrogate_after;
};

/// Online dictionary learning: mini-batch lasso coding against the current
/// dictionary, accumulation of A = sum a a^T and B = sum x a^T, then one
/// block-coordinate pass over the atoms with projection on the unit ball.
Dictionary learn_dictionary(std::span<const std::vector<double>> patches, ColorSpace cs,
                            int patch_side, const LearnOptions& opts, LearnTrace* trace = nullptr);

/// Resizes to 128x128, codes every stride-8 patch, pools by the mean absolute
/// coefficient per atom. The image colorspace must match the dictionary's.
features::FeatureVector encode_image(const ImageTensor& img, const LassoSolver& solver,
                                     double lambda = kDefaultLambda);
features::FeatureVector encode_image(const ImageTensor& img, const Dictionary& dict,
                                     double lambda = kDefaultLambda);

std::vector<std::uint8_t> serialize(const Dictionary& dict);
Dictionary deserialize(std::span<const std::uint8_t> bytes);
void save_dictionary(const std::filesystem::path& path, const Dictionary& dict);
Dictionary load_dictionary(const std::filesystem::path& path);

}  // namespace dermo::sparse
