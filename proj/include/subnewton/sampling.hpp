#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "subnewton/geometry.hpp"
#include "subnewton/linalg.hpp"
#include "subnewton/problems.hpp"

namespace subnewton {

enum class SizeVariant { HessianBasic, HessianConvex, HessianIntrinsic, Gradient };
enum class Replacement { With, Without };

/// Which power of kappa enters the Hessian sample-size bounds. The proved
/// lemma uses kappa^2; `FirstPower` reproduces the iteration-independent
/// display that uses K / gamma (kappa to the first power).
enum class KappaPower { Squared, FirstPower };

struct SampleSizePolicy {
  SizeVariant variant = SizeVariant::HessianBasic;
  double epsilon = 0.5;
  double delta = 0.1;
  Replacement replacement = Replacement::With;
  KappaPower kappa_power = KappaPower::Squared;

  /// Policy error when a field is out of range or inconsistent.
  void validate() const;
};

/// Unrounded Hessian bound: c kappa^2 ln(m / delta) / epsilon^2 with
/// (c, m) = (16, 2p), (4, 2p), or (16/3, 8d) for the three variants.
double hessian_sample_bound(const SampleSizePolicy& policy, double kappa, Eigen::Index p,
                            std::optional<double> d_intrinsic = std::nullopt);
std::uint64_t hessian_sample_size(const SampleSizePolicy& policy, double kappa, Eigen::Index p,
                                  std::optional<double> d_intrinsic = std::nullopt);

/// Unrounded gradient bound (G / epsilon)^2 (1 + sqrt(8 ln(1 / delta)))^2.
double gradient_sample_bound(double g_bound, double epsilon, double delta);
std::uint64_t gradient_sample_size(double g_bound, double epsilon, double delta);

/// Ceiling of a positive bound, never below 1. Values within 1e-9 relative of
/// an integer snap to it so that bounds which are integral in exact
/// arithmetic do not round up by one. Saturates at kMaxSampleSize.
std::uint64_t ceil_sample_count(double bound);
inline constexpr std::uint64_t kMaxSampleSize = std::uint64_t{1} << 62;

/// trace(V) / ||V|| for symmetric PSD nonzero V.
double intrinsic_dimension(const Matrix& v);

struct IntrinsicDimension {
  double scaled;    // of V = (|S|/n) sum_i (U^T H_i U)^2
  double unscaled;  // of sum_i (U^T H_i U)^2; identical up to rounding
};
IntrinsicDimension intrinsic_dimension_at(const ComponentOracle& oracle, const Vector& x,
                                          const ConeBasis& basis, std::uint64_t sample_size);

/// Multiset of component indices. Small draws are stored explicitly in draw
/// order (multiplicity 1 each); large with-replacement draws are stored as
/// ascending (index, count) pairs drawn from the exact multinomial law.
class SampleSet {
 public:
  struct Entry {
    std::uint32_t index;
    std::uint64_t multiplicity;
  };

  SampleSet() = default;
  SampleSet(std::vector<Entry> entries, std::uint64_t seed, Replacement scheme);

  /// Every index exactly once, ascending.
  static SampleSet full(std::size_t n);

  const std::vector<Entry>& entries() const { return entries_; }
  std::uint64_t size() const { return size_; }
  std::uint64_t seed() const { return seed_; }
  Replacement scheme() const { return scheme_; }
  bool empty() const { return size_ == 0; }

  /// Indices with repeats, in stored order. Input error above 10^8 items.
  std::vector<std::size_t> expanded() const;
  /// Per-index multiplicities (length n).
  std::vector<std::uint64_t> counts(std::size_t n) const;

 private:
  std::vector<Entry> entries_;
  std::uint64_t size_ = 0;
  std::uint64_t seed_ = 0;
  Replacement scheme_ = Replacement::With;
};

/// With-replacement draws larger than this multiple of n are stored compressed.
inline constexpr std::uint64_t kCompressionFactor = 4;

/// Deterministic uniform draw of `size` indices from {0..n-1}.
SampleSet draw_sample(std::size_t n, std::uint64_t size, Replacement scheme, std::uint64_t seed);

/// (1/|S|) sum_{j in S} hess f_j(x), accumulated in stored order.
Matrix assemble_subsampled_hessian(const ComponentOracle& oracle, const Vector& x,
                                   const SampleSet& sample);
/// (1/|S|) sum_{j in S} grad f_j(x), accumulated in stored order.
Vector assemble_subsampled_gradient(const ComponentOracle& oracle, const Vector& x,
                                    const SampleSet& sample);

struct SampleRecord {
  std::string role;  // "hessian", "gradient", "pilot", "shared", "full-gradient"
  std::uint64_t size = 0;
  std::uint64_t seed = 0;
};

/// Sampled gradient and (possibly regularized) sampled Hessian at a point.
struct SubsampledModel {
  Vector g;
  Matrix h;
  std::vector<SampleRecord> samples;
  std::string regularization = "none";  // "none", "spectral", "ridge"
  double lambda = 0.0;
};

}  // namespace subnewton
