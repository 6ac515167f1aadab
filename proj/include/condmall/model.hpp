#ifndef CONDMALL_MODEL_HPP
#define CONDMALL_MODEL_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "condmall/error.hpp"
#include "condmall/random.hpp"

namespace condmall {

struct ModelOptions {
  std::size_t cell_cap = 10'000'000;
};

template <typename Scalar>
struct BasicLatentSpace {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<std::string> labels;
  Vector probs;
  // Optional numeric payload per state (e.g. a Bernoulli parameter). Either
  // empty or one entry per state; the calculus never reads it.
  std::vector<Scalar> payload;
};

template <typename Scalar>
struct BasicComponentSpace {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  std::string label;
  Vector values;
  Matrix cond_pmf;  // |latent| x |values|
};

template <typename Scalar>
class BasicProductModel {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Latent = BasicLatentSpace<Scalar>;
  using Component = BasicComponentSpace<Scalar>;

  struct Sample {
    Eigen::Index latent = 0;
    std::vector<int> digits;
  };

  static std::shared_ptr<const BasicProductModel> create(Latent latent, std::vector<Component> components,
                                                         ModelOptions options = {}) {
    return std::shared_ptr<const BasicProductModel>(
        new BasicProductModel(std::move(latent), std::move(components), options));
  }

  const Latent& latent() const { return latent_; }
  const std::vector<Component>& components() const { return components_; }
  const Component& component(std::size_t a) const {
    check_index(a);
    return components_[a];
  }

  Eigen::Index latent_count() const { return latent_.probs.size(); }
  std::size_t component_count() const { return components_.size(); }
  Eigen::Index radix(std::size_t a) const { return components_[a].values.size(); }
  Eigen::Index stride(std::size_t a) const { return strides_[a]; }
  Eigen::Index configuration_count() const { return configurations_; }
  Eigen::Index cell_count() const { return configurations_ * latent_count(); }
  std::size_t cell_cap() const { return options_.cell_cap; }
  bool enumerable() const { return enumerable_; }

  Scalar latent_prob(Eigen::Index z) const { return latent_.probs(z); }
  Scalar pmf(Eigen::Index z, std::size_t a, Eigen::Index v) const { return components_[a].cond_pmf(z, v); }
  Scalar value(std::size_t a, Eigen::Index v) const { return components_[a].values(v); }

  int digit(Eigen::Index config, std::size_t a) const {
    return static_cast<int>((config / strides_[a]) % radix(a));
  }

  std::vector<int> digits(Eigen::Index config) const {
    std::vector<int> out(components_.size());
    for (std::size_t a = 0; a < components_.size(); ++a) out[a] = digit(config, a);
    return out;
  }

  Eigen::Index index_of(const std::vector<int>& digits) const {
    if (digits.size() != components_.size()) {
      throw Error(ErrorCode::InvalidArgument, "configuration has wrong length");
    }
    Eigen::Index idx = 0;
    for (std::size_t a = 0; a < components_.size(); ++a) {
      if (digits[a] < 0 || digits[a] >= radix(a)) {
        throw Error(ErrorCode::InvalidArgument, "digit out of range for component " + std::to_string(a));
      }
      idx += digits[a] * strides_[a];
    }
    return idx;
  }

  void check_index(std::size_t a) const {
    if (a >= components_.size()) {
      throw Error(ErrorCode::UnknownIndex, "component index " + std::to_string(a) + " not in A (|A| = " +
                                               std::to_string(components_.size()) + ")");
    }
  }

  void require_enumerable() const {
    if (!enumerable_) {
      throw Error(ErrorCode::SizeCapExceeded,
                  "model has more than " + std::to_string(options_.cell_cap) + " (latent, configuration) cells");
    }
  }

  // P(Z=z) * prod_a P(X_a = x_a | Z=z), laid out as z * |configurations| + config.
  const Vector& joint_weights() const {
    require_enumerable();
    return joint_;
  }

  // prod_a P(X_a = x_a | Z=z), same layout.
  const Vector& conditional_weights() const {
    require_enumerable();
    return conditional_;
  }

  Sample sample(RandomStream& rng) const {
    Sample s;
    s.latent = rng.categorical(latent_.probs);
    s.digits.resize(components_.size());
    for (std::size_t a = 0; a < components_.size(); ++a) {
      s.digits[a] = static_cast<int>(rng.categorical(components_[a].cond_pmf.row(s.latent)));
    }
    return s;
  }

 private:
  BasicProductModel(Latent latent, std::vector<Component> components, ModelOptions options)
      : latent_(std::move(latent)), components_(std::move(components)), options_(options) {
    validate();
    strides_.resize(components_.size());
    double total = static_cast<double>(latent_count());
    Eigen::Index stride = 1;
    bool overflow = false;
    for (std::size_t a = 0; a < components_.size(); ++a) {
      strides_[a] = stride;
      total *= static_cast<double>(radix(a));
      if (total > static_cast<double>(std::numeric_limits<std::int32_t>::max()) * 1024.0) overflow = true;
      if (!overflow) stride *= radix(a);
    }
    configurations_ = overflow ? -1 : stride;
    enumerable_ = !overflow && total <= static_cast<double>(options_.cell_cap);
    if (enumerable_) build_weights();
  }

  void fail(const std::string& path, const std::string& message) const {
    throw Error(ErrorCode::InvalidModel, path + ": " + message);
  }

  void validate() const {
    const auto tol = Scalar(1e-12);
    if (latent_.probs.size() == 0) fail("latent.probs", "latent space is empty");
    if (!latent_.labels.empty() && static_cast<Eigen::Index>(latent_.labels.size()) != latent_.probs.size()) {
      fail("latent.labels", "label count differs from probs length");
    }
    if (!latent_.payload.empty() && static_cast<Eigen::Index>(latent_.payload.size()) != latent_.probs.size()) {
      fail("latent.payload", "payload count differs from probs length");
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < latent_.labels.size(); ++i) {
      if (!seen.insert(latent_.labels[i]).second) {
        fail("latent.labels[" + std::to_string(i) + "]", "duplicate label '" + latent_.labels[i] + "'");
      }
    }
    Scalar sum(0);
    for (Eigen::Index z = 0; z < latent_.probs.size(); ++z) {
      Scalar p = latent_.probs(z);
      if (!(p >= Scalar(0)) || !std::isfinite(static_cast<double>(p))) {
        fail("latent.probs[" + std::to_string(z) + "]", "probability must be finite and >= 0");
      }
      sum += p;
    }
    if (std::abs(static_cast<double>(sum - Scalar(1))) > static_cast<double>(tol)) {
      fail("latent.probs", "sums to " + std::to_string(static_cast<double>(sum)) + ", expected 1");
    }
    if (components_.empty()) fail("components", "at least one component is required");
    for (std::size_t a = 0; a < components_.size(); ++a) {
      const auto& c = components_[a];
      std::string path = "components[" + std::to_string(a) + "]";
      if (c.values.size() == 0) fail(path + ".values", "value list is empty");
      for (Eigen::Index i = 0; i < c.values.size(); ++i) {
        if (!std::isfinite(static_cast<double>(c.values(i)))) {
          fail(path + ".values[" + std::to_string(i) + "]", "value must be finite");
        }
        for (Eigen::Index j = 0; j < i; ++j) {
          if (c.values(i) == c.values(j)) fail(path + ".values[" + std::to_string(i) + "]", "duplicate value");
        }
      }
      if (c.cond_pmf.rows() != latent_.probs.size() || c.cond_pmf.cols() != c.values.size()) {
        std::ostringstream msg;
        msg << "shape " << c.cond_pmf.rows() << "x" << c.cond_pmf.cols() << ", expected " << latent_.probs.size()
            << "x" << c.values.size();
        fail(path + ".cond_pmf", msg.str());
      }
      for (Eigen::Index z = 0; z < c.cond_pmf.rows(); ++z) {
        std::string row = path + ".cond_pmf[" + std::to_string(z) + "]";
        Scalar rs(0);
        for (Eigen::Index v = 0; v < c.cond_pmf.cols(); ++v) {
          Scalar p = c.cond_pmf(z, v);
          if (!(p >= Scalar(0)) || !std::isfinite(static_cast<double>(p))) {
            fail(row + "[" + std::to_string(v) + "]", "probability must be finite and >= 0");
          }
          rs += p;
        }
        if (std::abs(static_cast<double>(rs - Scalar(1))) > static_cast<double>(tol)) {
          fail(row, "sums to " + std::to_string(static_cast<double>(rs)) + ", expected 1");
        }
      }
    }
  }

  void build_weights() {
    const Eigen::Index n = configurations_;
    conditional_.resize(cell_count());
    joint_.resize(cell_count());
    for (Eigen::Index z = 0; z < latent_count(); ++z) {
      auto block = conditional_.segment(z * n, n);
      block.setOnes();
      for (std::size_t a = 0; a < components_.size(); ++a) {
        const Eigen::Index s = strides_[a];
        const Eigen::Index r = radix(a);
        for (Eigen::Index c = 0; c < n; ++c) block(c) *= components_[a].cond_pmf(z, (c / s) % r);
      }
      joint_.segment(z * n, n) = latent_.probs(z) * block;
    }
    Scalar total = joint_.sum();
    if (std::abs(static_cast<double>(total - Scalar(1))) > 1e-10) {
      fail("model", "joint law sums to " + std::to_string(static_cast<double>(total)));
    }
  }

  Latent latent_;
  std::vector<Component> components_;
  ModelOptions options_;
  std::vector<Eigen::Index> strides_;
  Eigen::Index configurations_ = 0;
  bool enumerable_ = false;
  Vector joint_;
  Vector conditional_;
};

template <typename Scalar>
using ModelPtr = std::shared_ptr<const BasicProductModel<Scalar>>;

// One cell of the enumeration: latent index, configuration index and digits,
// and the joint probability.
template <typename Scalar>
struct Cell {
  Eigen::Index latent;
  Eigen::Index config;
  const std::vector<int>& digits;
  Scalar probability;
};

template <typename Scalar>
class CellRange {
 public:
  class iterator {
   public:
    using value_type = Cell<Scalar>;
    using difference_type = std::ptrdiff_t;

    iterator(const BasicProductModel<Scalar>* model, Eigen::Index flat)
        : model_(model), flat_(flat), digits_(model->component_count(), 0) {}

    Cell<Scalar> operator*() const {
      const Eigen::Index n = model_->configuration_count();
      return {flat_ / n, flat_ % n, digits_, model_->joint_weights()(flat_)};
    }
    iterator& operator++() {
      ++flat_;
      for (std::size_t a = 0; a < digits_.size(); ++a) {
        if (++digits_[a] < model_->radix(a)) break;
        digits_[a] = 0;
      }
      return *this;
    }
    bool operator==(const iterator& other) const { return flat_ == other.flat_; }
    bool operator!=(const iterator& other) const { return flat_ != other.flat_; }

   private:
    const BasicProductModel<Scalar>* model_;
    Eigen::Index flat_;
    std::vector<int> digits_;
  };

  explicit CellRange(const BasicProductModel<Scalar>& model) : model_(&model) { model.require_enumerable(); }
  iterator begin() const { return iterator(model_, 0); }
  iterator end() const { return iterator(model_, model_->cell_count()); }

 private:
  const BasicProductModel<Scalar>* model_;
};

template <typename Scalar>
CellRange<Scalar> enumerate_configurations(const BasicProductModel<Scalar>& model) {
  return CellRange<Scalar>(model);
}

template <typename Scalar>
class BasicFunctional {
 public:
  using Model = BasicProductModel<Scalar>;
  using Table = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasicFunctional(ModelPtr<Scalar> model, Table table) : model_(std::move(model)), table_(std::move(table)) {
    model_->require_enumerable();
    if (table_.size() != model_->cell_count()) {
      throw Error(ErrorCode::InvalidArgument, "table length " + std::to_string(table_.size()) + " != " +
                                                  std::to_string(model_->cell_count()));
    }
    if (!table_.allFinite()) throw Error(ErrorCode::InvalidArgument, "functional has non-finite entries");
    const Eigen::Index n = model_->configuration_count();
    z_free_ = true;
    for (Eigen::Index z = 1; z < model_->latent_count() && z_free_; ++z) {
      z_free_ = table_.segment(z * n, n) == table_.head(n);
    }
  }

  static BasicFunctional zero(ModelPtr<Scalar> model) { return constant(std::move(model), Scalar(0)); }

  static BasicFunctional constant(ModelPtr<Scalar> model, Scalar c) {
    Table t = Table::Constant(model->cell_count(), c);
    return BasicFunctional(std::move(model), std::move(t));
  }

  // X_a as a functional.
  static BasicFunctional coordinate(ModelPtr<Scalar> model, std::size_t a) {
    model->check_index(a);
    return from_cells(model, [&](Eigen::Index, const std::vector<int>& d) { return model->value(a, d[a]); });
  }

  // A sigma(Z)-measurable functional with value v(z).
  template <typename Derived>
  static BasicFunctional latent(ModelPtr<Scalar> model, const Eigen::MatrixBase<Derived>& v) {
    if (v.size() != model->latent_count()) throw Error(ErrorCode::InvalidArgument, "latent vector length");
    const Eigen::Index n = model->configuration_count();
    Table t(model->cell_count());
    for (Eigen::Index z = 0; z < model->latent_count(); ++z) t.segment(z * n, n).setConstant(v(z));
    return BasicFunctional(std::move(model), std::move(t));
  }

  // Builds the table from f(latent, digits).
  template <typename Fn>
  static BasicFunctional from_cells(ModelPtr<Scalar> model, Fn&& f) {
    Table t(model->cell_count());
    Eigen::Index flat = 0;
    for (const auto& cell : enumerate_configurations(*model)) t(flat++) = static_cast<Scalar>(f(cell.latent, cell.digits));
    return BasicFunctional(std::move(model), std::move(t));
  }

  const Model& model() const { return *model_; }
  const ModelPtr<Scalar>& model_ptr() const { return model_; }
  const Table& table() const { return table_; }
  bool z_free() const { return z_free_; }

  Scalar operator()(Eigen::Index latent, Eigen::Index config) const {
    return table_(latent * model_->configuration_count() + config);
  }

  auto block(Eigen::Index latent) const {
    const Eigen::Index n = model_->configuration_count();
    return table_.segment(latent * n, n);
  }

  BasicFunctional with_table(Table t) const { return BasicFunctional(model_, std::move(t)); }

  template <typename Fn>
  BasicFunctional map(Fn&& f) const {
    return with_table(table_.unaryExpr(std::forward<Fn>(f)));
  }

 private:
  ModelPtr<Scalar> model_;
  Table table_;
  bool z_free_ = false;
};

template <typename Scalar>
void require_same_model(const BasicFunctional<Scalar>& f, const BasicFunctional<Scalar>& g) {
  if (f.model_ptr() != g.model_ptr()) throw Error(ErrorCode::MismatchedModel, "functionals live on different models");
}

template <typename Scalar>
BasicFunctional<Scalar> operator+(const BasicFunctional<Scalar>& f, const BasicFunctional<Scalar>& g) {
  require_same_model(f, g);
  return f.with_table(f.table() + g.table());
}

template <typename Scalar>
BasicFunctional<Scalar> operator-(const BasicFunctional<Scalar>& f, const BasicFunctional<Scalar>& g) {
  require_same_model(f, g);
  return f.with_table(f.table() - g.table());
}

template <typename Scalar>
BasicFunctional<Scalar> operator-(const BasicFunctional<Scalar>& f) {
  return f.with_table(-f.table());
}

// Pointwise product.
template <typename Scalar>
BasicFunctional<Scalar> operator*(const BasicFunctional<Scalar>& f, const BasicFunctional<Scalar>& g) {
  require_same_model(f, g);
  return f.with_table(f.table().cwiseProduct(g.table()));
}

template <typename Scalar>
BasicFunctional<Scalar> operator*(Scalar s, const BasicFunctional<Scalar>& f) {
  return f.with_table(s * f.table());
}

template <typename Scalar>
BasicFunctional<Scalar> operator*(const BasicFunctional<Scalar>& f, Scalar s) {
  return f.with_table(s * f.table());
}

template <typename Scalar>
BasicFunctional<Scalar> operator/(const BasicFunctional<Scalar>& f, Scalar s) {
  return f.with_table(f.table() / s);
}

template <typename Scalar>
Scalar max_abs(const BasicFunctional<Scalar>& f) {
  return f.table().size() == 0 ? Scalar(0) : f.table().cwiseAbs().maxCoeff();
}

template <typename Scalar>
Scalar max_abs_diff(const BasicFunctional<Scalar>& f, const BasicFunctional<Scalar>& g) {
  require_same_model(f, g);
  return (f.table() - g.table()).cwiseAbs().maxCoeff();
}

template <typename Scalar>
Scalar expectation(const BasicFunctional<Scalar>& f) {
  return f.model().joint_weights().dot(f.table());
}

// E[F | Z = z] for every latent state z. States with zero probability still
// get the conditional value, computed from the conditional product law.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> conditional_expectation_given_Z(const BasicFunctional<Scalar>& f) {
  const auto& m = f.model();
  const Eigen::Index n = m.configuration_count();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(m.latent_count());
  const auto& w = m.conditional_weights();
  for (Eigen::Index z = 0; z < m.latent_count(); ++z) out(z) = w.segment(z * n, n).dot(f.block(z));
  return out;
}

template <typename Scalar>
Scalar variance(const BasicFunctional<Scalar>& f) {
  Scalar mean = expectation(f);
  return f.model().joint_weights().dot((f.table().array() - mean).square().matrix());
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> conditional_variance(const BasicFunctional<Scalar>& f) {
  const auto& m = f.model();
  const Eigen::Index n = m.configuration_count();
  auto mean = conditional_expectation_given_Z(f);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(m.latent_count());
  const auto& w = m.conditional_weights();
  for (Eigen::Index z = 0; z < m.latent_count(); ++z) {
    out(z) = w.segment(z * n, n).dot((f.block(z).array() - mean(z)).square().matrix());
  }
  return out;
}

// E[F | Z] as a functional (constant in the configuration).
template <typename Scalar>
BasicFunctional<Scalar> given_Z(const BasicFunctional<Scalar>& f) {
  return BasicFunctional<Scalar>::latent(f.model_ptr(), conditional_expectation_given_Z(f));
}

// F - E[F | Z].
template <typename Scalar>
BasicFunctional<Scalar> center(const BasicFunctional<Scalar>& f) {
  return f - given_Z(f);
}

// X_a - E[X_a | Z].
template <typename Scalar>
BasicFunctional<Scalar> centered_coordinate(const ModelPtr<Scalar>& model, std::size_t a) {
  return center(BasicFunctional<Scalar>::coordinate(model, a));
}

// U = sum_a U_a 1_a; missing entries are zero.
template <typename Scalar>
class BasicSimpleProcess {
 public:
  explicit BasicSimpleProcess(ModelPtr<Scalar> model) : model_(std::move(model)) {}

  void set(std::size_t a, BasicFunctional<Scalar> u) {
    model_->check_index(a);
    if (u.model_ptr() != model_) throw Error(ErrorCode::MismatchedModel, "simple process entry on another model");
    entries_.insert_or_assign(a, std::move(u));
  }

  const ModelPtr<Scalar>& model_ptr() const { return model_; }
  const std::map<std::size_t, BasicFunctional<Scalar>>& entries() const { return entries_; }

  BasicFunctional<Scalar> at(std::size_t a) const {
    model_->check_index(a);
    auto it = entries_.find(a);
    return it == entries_.end() ? BasicFunctional<Scalar>::zero(model_) : it->second;
  }

 private:
  ModelPtr<Scalar> model_;
  std::map<std::size_t, BasicFunctional<Scalar>> entries_;
};

using LatentSpace = BasicLatentSpace<double>;
using ComponentSpace = BasicComponentSpace<double>;
using ProductModel = BasicProductModel<double>;
using Functional = BasicFunctional<double>;
using SimpleProcess = BasicSimpleProcess<double>;
using Vector = Eigen::VectorXd;

}  // namespace condmall

#endif  // CONDMALL_MODEL_HPP
