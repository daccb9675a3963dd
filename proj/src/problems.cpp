#include "subnewton/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <boost/random/poisson_distribution.hpp>

#include "subnewton/error.hpp"
#include "subnewton/rng.hpp"

namespace subnewton {

namespace {

constexpr double kPoissonExponentLimit = 700.0;
// max_t |d^3/dt^3 ln(1 + e^t)| = 1 / (6 sqrt(3)).
const double kLogisticThirdDerivativeMax = 1.0 / (6.0 * std::sqrt(3.0));

double log1pexp(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// Phi, Phi', Phi'' of the GLM cumulant function.
struct Cumulant {
  double value, first, second;
};

Cumulant cumulant(ObjectiveKind kind, double t) {
  switch (kind) {
    case ObjectiveKind::Ols: return {0.5 * t * t, t, 1.0};
    case ObjectiveKind::Logistic: {
      const double s = sigmoid(t);
      return {log1pexp(t), s, s * (1.0 - s)};
    }
    case ObjectiveKind::Poisson: {
      const double e = std::exp(t);
      return {e, e, e};
    }
    default: break;
  }
  fail(ErrorKind::Configuration, "cumulant requested for a non-GLM objective");
}

bool is_glm(ObjectiveKind kind) {
  return kind == ObjectiveKind::Ols || kind == ObjectiveKind::Logistic ||
         kind == ObjectiveKind::Poisson;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string_view to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::Ols: return "ols";
    case ObjectiveKind::Logistic: return "logistic";
    case ObjectiveKind::Poisson: return "poisson";
    case ObjectiveKind::SvmQuadHinge: return "svm";
    case ObjectiveKind::SyntheticQuadratic: return "quadratic";
  }
  return "unknown";
}

ObjectiveKind parse_objective_kind(std::string_view name) {
  if (name == "ols") return ObjectiveKind::Ols;
  if (name == "logistic") return ObjectiveKind::Logistic;
  if (name == "poisson") return ObjectiveKind::Poisson;
  if (name == "svm") return ObjectiveKind::SvmQuadHinge;
  if (name == "quadratic") return ObjectiveKind::SyntheticQuadratic;
  fail(ErrorKind::Input, "unknown objective kind '" + std::string(name) + "'");
}

void validate_dataset(const Dataset& data, ObjectiveKind kind) {
  require(data.n() >= 1 && data.p() >= 1, ErrorKind::Input, "dataset needs n >= 1 and p >= 1");
  require(data.labels.size() == data.n(), ErrorKind::Input,
          "label count " + std::to_string(data.labels.size()) + " does not match n = " +
              std::to_string(data.n()));
  require(data.features.allFinite() && data.labels.allFinite(), ErrorKind::Input,
          "dataset has non-finite entries");
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double b = data.labels(i);
    bool ok = true;
    switch (kind) {
      case ObjectiveKind::Ols: break;
      case ObjectiveKind::Logistic: ok = (b == 0.0 || b == 1.0); break;
      case ObjectiveKind::Poisson: ok = (b >= 0.0 && b == std::floor(b)); break;
      case ObjectiveKind::SvmQuadHinge: ok = (b == 1.0 || b == -1.0); break;
      case ObjectiveKind::SyntheticQuadratic:
        fail(ErrorKind::Input, "quadratic objectives are not defined by a dataset");
    }
    require(ok, ErrorKind::Input,
            "label " + fmt17(b) + " at row " + std::to_string(i) + " is outside the " +
                std::string(to_string(kind)) + " label domain");
  }
}

ComponentOracle ComponentOracle::glm(ObjectiveKind kind, Dataset data) {
  require(is_glm(kind), ErrorKind::Input, "glm() requires ols, logistic or poisson");
  validate_dataset(data, kind);
  ComponentOracle o;
  o.kind_ = kind;
  o.n_ = static_cast<std::size_t>(data.n());
  o.p_ = data.p();
  o.data_ = std::move(data);
  o.precompute_bounds();
  return o;
}

ComponentOracle ComponentOracle::svm(Dataset data, double c) {
  require(c > 0.0 && std::isfinite(c), ErrorKind::Input, "SVM requires C > 0");
  validate_dataset(data, ObjectiveKind::SvmQuadHinge);
  ComponentOracle o;
  o.kind_ = ObjectiveKind::SvmQuadHinge;
  o.n_ = static_cast<std::size_t>(data.n());
  o.p_ = data.p();
  o.data_ = std::move(data);
  o.svm_c_ = c;
  o.precompute_bounds();
  return o;
}

ComponentOracle ComponentOracle::quadratic(std::vector<Matrix> a, std::vector<Vector> c) {
  require(!a.empty() && a.size() == c.size(), ErrorKind::Input,
          "quadratic oracle needs n >= 1 matching (A_i, c_i) pairs");
  const Eigen::Index p = a.front().rows();
  require(p >= 1, ErrorKind::Input, "quadratic oracle needs p >= 1");
  for (std::size_t i = 0; i < a.size(); ++i) {
    require(a[i].rows() == p && a[i].cols() == p && c[i].size() == p, ErrorKind::Input,
            "component " + std::to_string(i) + " has inconsistent dimensions");
    a[i] = symmetrized(a[i], "A_i");
    require(symmetric_eigen(a[i], false).eigenvalues().minCoeff() >= -1e-10 * std::max(1.0, a[i].norm()),
            ErrorKind::Input, "A_" + std::to_string(i) + " is not positive semidefinite");
  }
  ComponentOracle o;
  o.kind_ = ObjectiveKind::SyntheticQuadratic;
  o.n_ = a.size();
  o.p_ = p;
  o.quad_a_ = std::move(a);
  o.quad_c_ = std::move(c);
  o.precompute_bounds();
  return o;
}

void ComponentOracle::precompute_bounds() {
  if (kind_ == ObjectiveKind::SyntheticQuadratic) return;
  double table = 0.0, slope = 0.0, offset = 0.0, rmax = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const auto a = data_.features.row(static_cast<Eigen::Index>(i));
    const double b = data_.labels(static_cast<Eigen::Index>(i));
    const double norm = a.norm();
    const double inf = a.cwiseAbs().maxCoeff();
    rmax = std::max(rmax, norm);
    double lead = 0.0;
    switch (kind_) {
      case ObjectiveKind::Ols: lead = inf; break;
      case ObjectiveKind::Logistic: lead = sigmoid(inf); break;
      case ObjectiveKind::Poisson: lead = std::exp(inf); break;
      default: break;
    }
    table = std::max(table, (lead + std::abs(b)) * norm);
    slope = std::max(slope, 2.0 * svm_c_ * norm * norm + 1.0);
    offset = std::max(offset, 2.0 * svm_c_ * std::abs(b) * norm);
  }
  max_row_norm_ = rmax;
  table_bound_ = table;
  svm_slope_ = slope;
  svm_offset_ = offset;
}

void ComponentOracle::check_index(std::size_t i) const {
  require(i < n_, ErrorKind::Input,
          "component index " + std::to_string(i) + " out of range [0, " + std::to_string(n_) + ")");
}

void ComponentOracle::check_point(const Vector& x) const {
  require(x.size() == p_, ErrorKind::Input,
          "point has dimension " + std::to_string(x.size()) + ", expected " + std::to_string(p_));
}

double ComponentOracle::predictor(std::size_t i, const Vector& x) const {
  const double t = data_.features.row(static_cast<Eigen::Index>(i)).dot(x);
  if (kind_ == ObjectiveKind::Poisson && t > kPoissonExponentLimit) {
    fail(ErrorKind::Overflow, "Poisson exponent a_i^T x = " + fmt17(t) + " exceeds " +
                                  fmt17(kPoissonExponentLimit) + " at component " +
                                  std::to_string(i) + "; rescale the data");
  }
  return t;
}

double ComponentOracle::component_value(std::size_t i, const Vector& x) const {
  check_index(i);
  check_point(x);
  if (kind_ == ObjectiveKind::SyntheticQuadratic) {
    return 0.5 * x.dot(quad_a_[i] * x) - quad_c_[i].dot(x);
  }
  const double t = predictor(i, x);
  const double b = data_.labels(static_cast<Eigen::Index>(i));
  if (kind_ == ObjectiveKind::SvmQuadHinge) {
    const double hinge = std::max(0.0, 1.0 - b * t);
    return svm_c_ * hinge * hinge + 0.5 * x.squaredNorm();
  }
  return cumulant(kind_, t).value - b * t;
}

void ComponentOracle::add_component_gradient(std::size_t i, const Vector& x, double weight,
                                             Vector& acc) const {
  check_index(i);
  check_point(x);
  if (kind_ == ObjectiveKind::SyntheticQuadratic) {
    acc.noalias() += weight * (quad_a_[i] * x - quad_c_[i]);
    return;
  }
  const auto a = data_.features.row(static_cast<Eigen::Index>(i)).transpose();
  const double t = predictor(i, x);
  const double b = data_.labels(static_cast<Eigen::Index>(i));
  if (kind_ == ObjectiveKind::SvmQuadHinge) {
    if (b * t < 1.0) acc.noalias() += (weight * 2.0 * svm_c_ * (t - b)) * a;
    acc.noalias() += weight * x;
    return;
  }
  acc.noalias() += (weight * (cumulant(kind_, t).first - b)) * a;
}

namespace {

// acc += s a a^T with each product formed as s (a_i a_j), so a symmetric
// accumulator stays bitwise symmetric.
template <class V>
void add_scaled_outer(Matrix& acc, double s, const V& a) {
  const Eigen::Index p = a.size();
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = j; i < p; ++i) {
      const double v = s * (a(i) * a(j));
      acc(i, j) += v;
      if (i != j) acc(j, i) += v;
    }
  }
}

}  // namespace

void ComponentOracle::add_component_hessian(std::size_t i, const Vector& x, double weight,
                                            Matrix& acc) const {
  check_index(i);
  check_point(x);
  if (kind_ == ObjectiveKind::SyntheticQuadratic) {
    acc.noalias() += weight * quad_a_[i];
    return;
  }
  const auto a = data_.features.row(static_cast<Eigen::Index>(i)).transpose();
  const double t = predictor(i, x);
  if (kind_ == ObjectiveKind::SvmQuadHinge) {
    const double b = data_.labels(static_cast<Eigen::Index>(i));
    if (b * t < 1.0) add_scaled_outer(acc, weight * 2.0 * svm_c_, a);
    acc.diagonal().array() += weight;
    return;
  }
  add_scaled_outer(acc, weight * cumulant(kind_, t).second, a);
}

Vector ComponentOracle::component_gradient(std::size_t i, const Vector& x) const {
  Vector g = Vector::Zero(p_);
  add_component_gradient(i, x, 1.0, g);
  return g;
}

Matrix ComponentOracle::component_hessian(std::size_t i, const Vector& x) const {
  Matrix h = Matrix::Zero(p_, p_);
  add_component_hessian(i, x, 1.0, h);
  return h;
}

double ComponentOracle::full_value(const Vector& x) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < n_; ++i) sum += component_value(i, x);
  return sum / static_cast<double>(n_);
}

Vector ComponentOracle::full_gradient(const Vector& x) const {
  Vector g = Vector::Zero(p_);
  for (std::size_t i = 0; i < n_; ++i) add_component_gradient(i, x, 1.0, g);
  return g / static_cast<double>(n_);
}

Matrix ComponentOracle::full_hessian(const Vector& x) const {
  Matrix h = Matrix::Zero(p_, p_);
  for (std::size_t i = 0; i < n_; ++i) add_component_hessian(i, x, 1.0, h);
  h /= static_cast<double>(n_);
  return 0.5 * (h + h.transpose());
}

std::optional<double> ComponentOracle::hessian_lipschitz() const {
  if (user_lipschitz_) return user_lipschitz_;
  switch (kind_) {
    case ObjectiveKind::Ols:
    case ObjectiveKind::SyntheticQuadratic: return 0.0;
    case ObjectiveKind::Logistic:
      return kLogisticThirdDerivativeMax * max_row_norm_ * max_row_norm_ * max_row_norm_;
    default: return std::nullopt;
  }
}

void ComponentOracle::set_hessian_lipschitz(double l) {
  require(l >= 0.0 && std::isfinite(l), ErrorKind::Input, "Hessian Lipschitz constant must be >= 0");
  user_lipschitz_ = l;
}

double gradient_bound(const ComponentOracle& oracle, const std::optional<Vector>& x) {
  const auto kind = oracle.kind();
  if (!x) {
    require(is_glm(kind), ErrorKind::Configuration,
            "uniform gradient bound is only available for ols, logistic and poisson");
    return oracle.table_bound_;
  }
  require(kind == ObjectiveKind::SvmQuadHinge, ErrorKind::Configuration,
          "pointwise gradient bound is only available for svm");
  require(x->size() == oracle.p(), ErrorKind::Input, "point dimension mismatch");
  return x->norm() * oracle.svm_slope_ + oracle.svm_offset_;
}

double exact_gradient_bound(const ComponentOracle& oracle, const Vector& x) {
  double g = 0.0;
  Vector tmp(oracle.p());
  for (std::size_t i = 0; i < oracle.n(); ++i) {
    tmp.setZero();
    oracle.add_component_gradient(i, x, 1.0, tmp);
    g = std::max(g, tmp.norm());
  }
  return g;
}

double estimate_hessian_lipschitz(const ComponentOracle& oracle, const Vector& center,
                                  double radius, int pairs, std::uint64_t seed) {
  require(center.size() == oracle.p(), ErrorKind::Input, "center dimension mismatch");
  require(radius > 0.0 && pairs >= 1, ErrorKind::Input, "need radius > 0 and pairs >= 1");
  if (oracle.kind() == ObjectiveKind::SyntheticQuadratic || oracle.kind() == ObjectiveKind::Ols) {
    return 0.0;
  }
  CounterRng rng(seed);
  const auto p = oracle.p();
  auto draw = [&] {
    Vector d(p);
    for (Eigen::Index j = 0; j < p; ++j) d(j) = rng.normal();
    const double scale = radius * std::pow(rng.uniform01(), 1.0 / static_cast<double>(p));
    return Vector(center + scale * d / d.norm());
  };
  double best = 0.0;
  for (int k = 0; k < pairs; ++k) {
    const Vector x = draw();
    const Vector y = draw();
    const double dist = (x - y).norm();
    if (dist == 0.0) continue;
    for (std::size_t i = 0; i < oracle.n(); ++i) {
      // Component Hessians here are rank one plus (for SVM) a constant, so
      // the spectral norm of the difference is |w(x) - w(y)| ||a_i||^2.
      const auto a = oracle.data().features.row(static_cast<Eigen::Index>(i));
      const double tx = a.dot(x), ty = a.dot(y);
      double wx = 0.0, wy = 0.0;
      if (oracle.kind() == ObjectiveKind::SvmQuadHinge) {
        const double b = oracle.data().labels(static_cast<Eigen::Index>(i));
        wx = b * tx < 1.0 ? 2.0 * oracle.svm_c() : 0.0;
        wy = b * ty < 1.0 ? 2.0 * oracle.svm_c() : 0.0;
      } else {
        wx = cumulant(oracle.kind(), tx).second;
        wy = cumulant(oracle.kind(), ty).second;
      }
      best = std::max(best, std::abs(wx - wy) * a.squaredNorm() / dist);
    }
  }
  return best;
}

namespace {

Matrix gaussian_matrix(CounterRng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

Vector column_scales(Eigen::Index p, double conditioning) {
  // Geometric spacing so that the feature covariance has condition number
  // equal to `conditioning`.
  Vector s(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double frac = p == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(p - 1);
    s(j) = std::pow(conditioning, -0.5 * frac);
  }
  return s;
}

}  // namespace

Vector quadratic_minimizer(const ComponentOracle& oracle) {
  require(oracle.kind() == ObjectiveKind::SyntheticQuadratic, ErrorKind::Configuration,
          "closed-form minimizer exists only for quadratic oracles");
  const auto p = oracle.p();
  Matrix a_sum = Matrix::Zero(p, p);
  Vector c_sum = Vector::Zero(p);
  for (std::size_t i = 0; i < oracle.n(); ++i) {
    a_sum += oracle.quadratic_matrices()[i];
    c_sum += oracle.quadratic_vectors()[i];
  }
  Eigen::LDLT<Matrix> ldlt(a_sum);
  require(ldlt.info() == Eigen::Success && ldlt.isPositive(), ErrorKind::Domain,
          "sum of A_i is not positive definite");
  Vector x = ldlt.solve(c_sum);
  // One step of iterative refinement.
  x += ldlt.solve(Vector(c_sum - a_sum * x));
  return x;
}

SyntheticProblem make_synthetic(const SyntheticSpec& spec) {
  require(spec.n >= 1 && spec.p >= 1, ErrorKind::Input, "synthetic problem needs n, p >= 1");
  require(spec.conditioning >= 1.0 && std::isfinite(spec.conditioning), ErrorKind::Input,
          "conditioning must be >= 1");
  const auto p = spec.p;
  const auto n = static_cast<Eigen::Index>(spec.n);
  CounterRng rng(derive_stream_key(spec.seed, 0, StreamPurpose::Data));
  const Vector scales = column_scales(p, spec.conditioning);

  if (spec.kind == ObjectiveKind::SyntheticQuadratic) {
    // A_i = Q D^{1/2} W_i D^{1/2} Q^T with E[W_i] = I and W_i >= I/2.
    Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(rng, p, p));
    const Matrix q = qr.householderQ();
    const Matrix root = q * scales.asDiagonal();
    std::vector<Matrix> as;
    std::vector<Vector> cs;
    as.reserve(spec.n);
    cs.reserve(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
      const Matrix z = gaussian_matrix(rng, p, p);
      const Matrix w = z * z.transpose() / (2.0 * static_cast<double>(p)) + 0.5 * Matrix::Identity(p, p);
      Matrix a = root * w * root.transpose();
      as.emplace_back(0.5 * (a + a.transpose()));
      cs.emplace_back(gaussian_matrix(rng, p, 1).col(0));
    }
    auto oracle = ComponentOracle::quadratic(std::move(as), std::move(cs));
    Vector x_star = quadratic_minimizer(oracle);
    return {std::move(oracle), std::move(x_star)};
  }

  Dataset data;
  data.features = gaussian_matrix(rng, n, p) * scales.asDiagonal();
  Vector w = gaussian_matrix(rng, p, 1).col(0) / std::sqrt(static_cast<double>(p));
  data.labels.resize(n);
  switch (spec.kind) {
    case ObjectiveKind::Ols:
      for (Eigen::Index i = 0; i < n; ++i)
        data.labels(i) = data.features.row(i).dot(w) + 0.1 * rng.normal();
      return {ComponentOracle::glm(spec.kind, std::move(data)), std::nullopt};
    case ObjectiveKind::Logistic:
      for (Eigen::Index i = 0; i < n; ++i)
        data.labels(i) = rng.uniform01() < sigmoid(data.features.row(i).dot(w)) ? 1.0 : 0.0;
      return {ComponentOracle::glm(spec.kind, std::move(data)), std::nullopt};
    case ObjectiveKind::Poisson: {
      w *= 0.5;
      for (Eigen::Index i = 0; i < n; ++i) {
        boost::random::poisson_distribution<long, double> dist(std::exp(data.features.row(i).dot(w)));
        data.labels(i) = static_cast<double>(dist(rng));
      }
      return {ComponentOracle::glm(spec.kind, std::move(data)), std::nullopt};
    }
    case ObjectiveKind::SvmQuadHinge:
      for (Eigen::Index i = 0; i < n; ++i)
        data.labels(i) = data.features.row(i).dot(w) + 0.3 * rng.normal() >= 0.0 ? 1.0 : -1.0;
      return {ComponentOracle::svm(std::move(data), spec.svm_c), std::nullopt};
    case ObjectiveKind::SyntheticQuadratic: break;
  }
  fail(ErrorKind::Input, "unsupported synthetic kind");
}

Dataset read_dataset_csv(std::istream& in, ObjectiveKind kind) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Input, "CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  require(header.size() >= 2 && header[0] == "b", ErrorKind::Input,
          "CSV header must be 'b,a1,...,ap'");
  for (std::size_t j = 1; j < header.size(); ++j) {
    require(header[j] == "a" + std::to_string(j), ErrorKind::Input,
            "CSV header column " + std::to_string(j) + " must be 'a" + std::to_string(j) + "'");
  }
  const auto p = static_cast<Eigen::Index>(header.size() - 1);
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t cols = 0;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      require(end != cell.c_str() && *end == '\0', ErrorKind::Input,
              "CSV record " + std::to_string(rows + 1) + " has a non-numeric field '" + cell + "'");
      values.push_back(v);
      ++cols;
    }
    require(cols == header.size(), ErrorKind::Input,
            "CSV record " + std::to_string(rows + 1) + " has " + std::to_string(cols) +
                " fields, expected " + std::to_string(header.size()));
    ++rows;
  }
  Dataset data;
  data.features.resize(static_cast<Eigen::Index>(rows), p);
  data.labels.resize(static_cast<Eigen::Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * header.size();
    data.labels(static_cast<Eigen::Index>(r)) = values[base];
    for (Eigen::Index j = 0; j < p; ++j)
      data.features(static_cast<Eigen::Index>(r), j) = values[base + 1 + static_cast<std::size_t>(j)];
  }
  validate_dataset(data, kind);
  return data;
}

Dataset load_dataset_csv(const std::string& path, ObjectiveKind kind) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open dataset '" + path + "'");
  return read_dataset_csv(in, kind);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << 'b';
  for (Eigen::Index j = 0; j < data.p(); ++j) out << ",a" << (j + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << fmt17(data.labels(i));
    for (Eigen::Index j = 0; j < data.p(); ++j) out << ',' << fmt17(data.features(i, j));
    out << '\n';
  }
}

void save_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot write dataset '" + path + "'");
  write_dataset_csv(out, data);
  out.flush();
  require(out.good(), ErrorKind::Io, "failed writing dataset '" + path + "'");
}

}  // namespace subnewton
