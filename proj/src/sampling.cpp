#include "subnewton/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/random/binomial_distribution.hpp>

#include "subnewton/error.hpp"
#include "subnewton/rng.hpp"

namespace subnewton {

namespace {

bool open_unit(double v) { return v > 0.0 && v < 1.0; }

std::string num(double v) { return std::to_string(v); }

}  // namespace

void SampleSizePolicy::validate() const {
  require(open_unit(epsilon), ErrorKind::Policy, "epsilon must lie in (0, 1), got " + num(epsilon));
  require(open_unit(delta), ErrorKind::Policy, "delta must lie in (0, 1), got " + num(delta));
  if (variant == SizeVariant::HessianIntrinsic) {
    require(epsilon <= 0.5, ErrorKind::Policy,
            "intrinsic-dimension bound requires epsilon <= 1/2, got " + num(epsilon));
    require(replacement == Replacement::With, ErrorKind::Policy,
            "intrinsic-dimension bound requires sampling with replacement");
  }
}

std::uint64_t ceil_sample_count(double bound) {
  require(!std::isnan(bound), ErrorKind::Numeric, "sample-size bound is NaN");
  if (bound <= 1.0) return 1;
  if (bound >= static_cast<double>(kMaxSampleSize)) return kMaxSampleSize;
  const double nearest = std::round(bound);
  if (std::abs(bound - nearest) <= 1e-9 * bound) return static_cast<std::uint64_t>(nearest);
  return static_cast<std::uint64_t>(std::ceil(bound));
}

double hessian_sample_bound(const SampleSizePolicy& policy, double kappa, Eigen::Index p,
                            std::optional<double> d_intrinsic) {
  policy.validate();
  require(policy.variant != SizeVariant::Gradient, ErrorKind::Policy,
          "gradient policy passed to the Hessian sample-size calculator");
  require(kappa > 0.0 && std::isfinite(kappa), ErrorKind::Domain, "kappa must be positive");
  require(p >= 1, ErrorKind::Input, "dimension p must be >= 1");
  const bool intrinsic = policy.variant == SizeVariant::HessianIntrinsic;
  require(intrinsic == d_intrinsic.has_value(), ErrorKind::Policy,
          intrinsic ? "intrinsic-dimension bound needs d" : "d is only used by the intrinsic bound");
  const double k = policy.kappa_power == KappaPower::Squared ? kappa * kappa : kappa;
  const double eps2 = policy.epsilon * policy.epsilon;
  switch (policy.variant) {
    case SizeVariant::HessianBasic:
      return 16.0 * k * std::log(2.0 * static_cast<double>(p) / policy.delta) / eps2;
    case SizeVariant::HessianConvex:
      return 4.0 * k * std::log(2.0 * static_cast<double>(p) / policy.delta) / eps2;
    case SizeVariant::HessianIntrinsic: {
      const double d = *d_intrinsic;
      require(d > 0.0 && std::isfinite(d), ErrorKind::Domain, "intrinsic dimension must be positive");
      return 16.0 * k * std::log(8.0 * d / policy.delta) / (3.0 * eps2);
    }
    case SizeVariant::Gradient: break;
  }
  fail(ErrorKind::Policy, "unreachable variant");
}

std::uint64_t hessian_sample_size(const SampleSizePolicy& policy, double kappa, Eigen::Index p,
                                  std::optional<double> d_intrinsic) {
  return ceil_sample_count(hessian_sample_bound(policy, kappa, p, d_intrinsic));
}

double gradient_sample_bound(double g_bound, double epsilon, double delta) {
  require(g_bound >= 0.0 && std::isfinite(g_bound), ErrorKind::Domain, "G must be finite and >= 0");
  require(open_unit(epsilon), ErrorKind::Policy, "epsilon must lie in (0, 1), got " + num(epsilon));
  require(open_unit(delta), ErrorKind::Policy, "delta must lie in (0, 1), got " + num(delta));
  const double lead = 1.0 + std::sqrt(8.0 * std::log(1.0 / delta));
  const double ratio = g_bound / epsilon;
  return ratio * ratio * lead * lead;
}

std::uint64_t gradient_sample_size(double g_bound, double epsilon, double delta) {
  return ceil_sample_count(gradient_sample_bound(g_bound, epsilon, delta));
}

double intrinsic_dimension(const Matrix& v) {
  const Matrix sym = symmetrized(v, "V");
  const auto es = symmetric_eigen(sym, false);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  require(top > 0.0, ErrorKind::Domain, "intrinsic dimension of the zero matrix is undefined");
  require(es.eigenvalues().minCoeff() >= -1e-10 * top, ErrorKind::Input, "V must be PSD");
  return sym.trace() / top;
}

IntrinsicDimension intrinsic_dimension_at(const ComponentOracle& oracle, const Vector& x,
                                          const ConeBasis& basis, std::uint64_t sample_size) {
  const auto r = basis.dim();
  Matrix sum = Matrix::Zero(r, r);
  for (std::size_t i = 0; i < oracle.n(); ++i) {
    const Matrix c = basis.compress(oracle.component_hessian(i, x));
    sum.noalias() += c * c;
  }
  const double factor = static_cast<double>(sample_size) / static_cast<double>(oracle.n());
  return {intrinsic_dimension(factor * sum), intrinsic_dimension(sum)};
}

SampleSet::SampleSet(std::vector<Entry> entries, std::uint64_t seed, Replacement scheme)
    : entries_(std::move(entries)), seed_(seed), scheme_(scheme) {
  for (const auto& e : entries_) size_ += e.multiplicity;
}

SampleSet SampleSet::full(std::size_t n) {
  std::vector<Entry> entries(n);
  for (std::size_t i = 0; i < n; ++i) entries[i] = {static_cast<std::uint32_t>(i), 1};
  return SampleSet(std::move(entries), 0, Replacement::Without);
}

std::vector<std::size_t> SampleSet::expanded() const {
  require(size_ <= 100'000'000, ErrorKind::Input, "sample set too large to expand");
  std::vector<std::size_t> out;
  out.reserve(size_);
  for (const auto& e : entries_)
    for (std::uint64_t k = 0; k < e.multiplicity; ++k) out.push_back(e.index);
  return out;
}

std::vector<std::uint64_t> SampleSet::counts(std::size_t n) const {
  std::vector<std::uint64_t> out(n, 0);
  for (const auto& e : entries_) {
    require(e.index < n, ErrorKind::Input, "sample index out of range");
    out[e.index] += e.multiplicity;
  }
  return out;
}

SampleSet draw_sample(std::size_t n, std::uint64_t size, Replacement scheme, std::uint64_t seed) {
  require(n >= 1, ErrorKind::Input, "population must be nonempty");
  require(n <= 0xFFFFFFFFu, ErrorKind::Input, "population too large");
  require(size >= 1, ErrorKind::Input, "sample size must be >= 1");
  CounterRng rng(seed);
  std::vector<SampleSet::Entry> entries;

  if (scheme == Replacement::Without) {
    require(size <= n, ErrorKind::Input,
            "cannot draw " + std::to_string(size) + " distinct indices from " + std::to_string(n));
    // Partial Fisher-Yates shuffle.
    std::vector<std::uint32_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0u);
    entries.reserve(size);
    for (std::uint64_t j = 0; j < size; ++j) {
      const auto k = j + rng.uniform_index(n - j);
      std::swap(pool[j], pool[k]);
      entries.push_back({pool[j], 1});
    }
    return SampleSet(std::move(entries), seed, scheme);
  }

  if (size <= kCompressionFactor * n) {
    entries.reserve(size);
    for (std::uint64_t j = 0; j < size; ++j)
      entries.push_back({static_cast<std::uint32_t>(rng.uniform_index(n)), 1});
    return SampleSet(std::move(entries), seed, scheme);
  }

  // Multinomial(size; 1/n, ..., 1/n) via sequential conditional binomials;
  // equal in law to `size` independent uniform draws.
  std::uint64_t remaining = size;
  for (std::size_t i = 0; i < n && remaining > 0; ++i) {
    std::uint64_t count = remaining;
    if (i + 1 < n) {
      boost::random::binomial_distribution<std::int64_t, double> bin(
          static_cast<std::int64_t>(remaining), 1.0 / static_cast<double>(n - i));
      count = static_cast<std::uint64_t>(bin(rng));
    }
    if (count > 0) entries.push_back({static_cast<std::uint32_t>(i), count});
    remaining -= count;
  }
  return SampleSet(std::move(entries), seed, scheme);
}

Matrix assemble_subsampled_hessian(const ComponentOracle& oracle, const Vector& x,
                                   const SampleSet& sample) {
  require(!sample.empty(), ErrorKind::Input, "sample set is empty");
  Matrix h = Matrix::Zero(oracle.p(), oracle.p());
  for (const auto& e : sample.entries())
    oracle.add_component_hessian(e.index, x, static_cast<double>(e.multiplicity), h);
  h /= static_cast<double>(sample.size());
  return 0.5 * (h + h.transpose());
}

Vector assemble_subsampled_gradient(const ComponentOracle& oracle, const Vector& x,
                                    const SampleSet& sample) {
  require(!sample.empty(), ErrorKind::Input, "sample set is empty");
  Vector g = Vector::Zero(oracle.p());
  for (const auto& e : sample.entries())
    oracle.add_component_gradient(e.index, x, static_cast<double>(e.multiplicity), g);
  return g / static_cast<double>(sample.size());
}

}  // namespace subnewton
