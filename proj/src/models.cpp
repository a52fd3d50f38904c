#include "npplab/models.hpp"

#include "npplab/errors.hpp"
#include "npplab/random.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace npplab {
namespace {

Eigen::MatrixXd centered_covariance(const Matrix& x) {
  const Eigen::MatrixXd centered = x.colwise() - x.rowwise().mean();
  return centered * centered.transpose() / static_cast<double>(x.cols());
}

void add_ridge(Eigen::MatrixXd& cov) {
  const double n = static_cast<double>(cov.rows());
  cov.diagonal().array() += kCovRidge * cov.trace() / n;
}

void check_labels(std::span<const Trial> trials, std::span<const int> labels) {
  if (trials.size() != labels.size()) throw ConfigError("trial and label counts differ");
  if (trials.empty()) throw ConfigError("no training trials");
  const Eigen::Index c = trials.front().data.rows();
  const Eigen::Index s = trials.front().data.cols();
  for (const Trial& t : trials) {
    if (t.data.rows() != c || t.data.cols() != s) throw ConfigError("inconsistent trial shapes");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw ConfigError("expected exactly two classes labelled 0 and 1, got label " + std::to_string(y));
  }
}

std::size_t count_label(std::span<const int> labels, int label) {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

// Deterministic sign: the entry of largest magnitude is positive.
void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v(arg) < 0.0) v = -v;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double log_loss(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& X, std::span<const int> y) {
  const Eigen::VectorXd z = (X * w).array() + b;
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) total += softplus(z(i)) - y[static_cast<std::size_t>(i)] * z(i);
  return total / static_cast<double>(z.size());
}

}  // namespace

const char* to_string(FeatureKind kind) {
  return kind == FeatureKind::csp_logvar ? "csp_logvar" : "xdawn_flat";
}

FeatureKind feature_kind_from_string(const std::string& s) {
  if (s == "csp_logvar") return FeatureKind::csp_logvar;
  if (s == "xdawn_flat") return FeatureKind::xdawn_flat;
  throw ConfigError("unknown model kind '" + s + "' (expected csp_logvar or xdawn_flat)");
}

std::vector<int> labels_of(std::span<const Trial> trials) {
  std::vector<int> y;
  y.reserve(trials.size());
  for (const Trial& t : trials) y.push_back(t.label);
  return y;
}

Eigen::MatrixXd class_covariance(std::span<const Trial> trials, std::span<const int> labels, int label) {
  if (trials.size() != labels.size()) throw ConfigError("trial and label counts differ");
  Eigen::MatrixXd sum;
  std::size_t n = 0;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (labels[i] != label) continue;
    Eigen::MatrixXd cov = centered_covariance(trials[i].data);
    const double tr = cov.trace();
    if (!(tr > 0.0) || !std::isfinite(tr)) throw DegenerateError("trial " + std::to_string(i) + " has zero power");
    cov /= tr;
    if (n == 0) {
      sum = cov;
    } else {
      sum += cov;
    }
    ++n;
  }
  if (n == 0) throw ConfigError("no trials with label " + std::to_string(label));
  return sum / static_cast<double>(n);
}

SpatialFilters fit_csp(std::span<const Trial> trials, std::span<const int> labels, std::size_t n_pairs) {
  check_labels(trials, labels);
  if (count_label(labels, 0) < 2 || count_label(labels, 1) < 2) {
    throw ConfigError("CSP needs two classes with at least two trials each");
  }
  const auto n_ch = static_cast<std::size_t>(trials.front().data.rows());
  if (n_pairs < 1 || 2 * n_pairs > n_ch) {
    throw ConfigError("CSP needs 1 <= n_pairs <= channels / 2, got " + std::to_string(n_pairs));
  }

  Eigen::MatrixXd s0 = class_covariance(trials, labels, 0);
  Eigen::MatrixXd s1 = class_covariance(trials, labels, 1);
  add_ridge(s0);
  add_ridge(s1);
  const Eigen::MatrixXd composite = s0 + s1;
  if (Eigen::LLT<Eigen::MatrixXd>(composite).info() != Eigen::Success) {
    throw NumericalError("composite covariance is not positive definite");
  }

  // Eigenvalues ascending, eigenvectors normalized to V^T composite V = I.
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(s0, composite);
  if (solver.info() != Eigen::Success) throw NumericalError("CSP eigen decomposition failed");
  const Eigen::MatrixXd& vecs = solver.eigenvectors();
  const Eigen::VectorXd& vals = solver.eigenvalues();
  const auto c = static_cast<Eigen::Index>(n_ch);
  const auto p = static_cast<Eigen::Index>(n_pairs);

  SpatialFilters f;
  f.kind = FilterKind::csp;
  f.weights.resize(c, 2 * p);
  f.eigenvalues.resize(2 * p);
  for (Eigen::Index j = 0; j < p; ++j) {
    f.weights.col(j) = vecs.col(c - 1 - j);
    f.eigenvalues(j) = vals(c - 1 - j);
    f.weights.col(p + j) = vecs.col(p - 1 - j);
    f.eigenvalues(p + j) = vals(p - 1 - j);
  }
  for (Eigen::Index j = 0; j < 2 * p; ++j) fix_sign(f.weights.col(j));
  if (!f.weights.allFinite()) throw NumericalError("CSP produced non-finite filters");
  return f;
}

Eigen::VectorXd csp_logvar_features(const Trial& trial, const SpatialFilters& filters) {
  if (filters.kind != FilterKind::csp) throw ConfigError("log-variance features need CSP filters");
  if (trial.n_channels() != filters.n_channels()) throw ConfigError("trial channel count does not match filters");
  const Eigen::MatrixXd y = filters.weights.transpose() * trial.data;
  Eigen::VectorXd f(y.rows());
  for (Eigen::Index j = 0; j < y.rows(); ++j) {
    const double mean = y.row(j).mean();
    const double var = (y.row(j).array() - mean).square().mean();
    if (!(var > 0.0)) throw DegenerateError("spatial filter " + std::to_string(j) + " projects to zero variance");
    f(j) = std::log(var);
  }
  return f;
}

SpatialFilters fit_xdawn(std::span<const Trial> trials, std::span<const int> labels, std::size_t n_filters,
                         int target_class) {
  check_labels(trials, labels);
  if (target_class != 0 && target_class != 1) throw ConfigError("target class must be 0 or 1");
  const std::size_t n_target = count_label(labels, target_class);
  if (n_target == 0) throw ConfigError("xDAWN needs at least one target-class trial");
  if (count_label(labels, 1 - target_class) == 0) throw ConfigError("xDAWN needs two classes");
  const auto n_ch = static_cast<std::size_t>(trials.front().data.rows());
  if (n_filters < 1 || n_filters > n_ch) {
    throw ConfigError("xDAWN needs 1 <= n_filters <= channels, got " + std::to_string(n_filters));
  }

  const Eigen::Index c = trials.front().data.rows();
  const Eigen::Index s = trials.front().data.cols();
  Matrix evoked = Matrix::Zero(c, s);
  Eigen::MatrixXd data_cov = Eigen::MatrixXd::Zero(c, c);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    data_cov += centered_covariance(trials[i].data);
    if (labels[i] == target_class) evoked += trials[i].data;
  }
  evoked /= static_cast<double>(n_target);
  data_cov /= static_cast<double>(trials.size());
  add_ridge(data_cov);
  const Eigen::MatrixXd evoked_cov = centered_covariance(evoked);
  if (Eigen::LLT<Eigen::MatrixXd>(data_cov).info() != Eigen::Success) {
    throw NumericalError("data covariance is not positive definite");
  }

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(evoked_cov, data_cov);
  if (solver.info() != Eigen::Success) throw NumericalError("xDAWN eigen decomposition failed");

  SpatialFilters f;
  f.kind = FilterKind::xdawn;
  const auto k = static_cast<Eigen::Index>(n_filters);
  f.weights.resize(c, k);
  f.eigenvalues.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    f.weights.col(j) = solver.eigenvectors().col(c - 1 - j);
    f.eigenvalues(j) = solver.eigenvalues()(c - 1 - j);
    fix_sign(f.weights.col(j));
  }
  if (!f.weights.allFinite()) throw NumericalError("xDAWN produced non-finite filters");

  // Averaging n_target noise-only trials leaves 1/n_target of the noise power;
  // the largest sample eigenvalue of that residual sits near the
  // Marchenko-Pastur edge (1 + sqrt(C/S))^2 / n_target.
  const double edge = std::pow(1.0 + std::sqrt(static_cast<double>(c) / static_cast<double>(s)), 2);
  const double floor = edge / static_cast<double>(n_target);
  f.low_separation = f.eigenvalues(0) < 4.0 * floor;
  return f;
}

Eigen::VectorXd xdawn_features(const Trial& trial, const SpatialFilters& filters, std::size_t decim) {
  if (filters.kind != FilterKind::xdawn) throw ConfigError("xDAWN features need xDAWN filters");
  if (decim < 1) throw ConfigError("decimation factor must be >= 1");
  if (trial.n_channels() != filters.n_channels()) throw ConfigError("trial channel count does not match filters");
  const Eigen::MatrixXd y = filters.weights.transpose() * trial.data;
  const auto s = static_cast<std::size_t>(y.cols());
  const std::size_t blocks = (s + decim - 1) / decim;
  Eigen::VectorXd f(y.rows() * static_cast<Eigen::Index>(blocks));
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < y.rows(); ++j) {
    for (std::size_t b = 0; b < blocks; ++b) {
      const std::size_t start = b * decim;
      const std::size_t len = std::min(decim, s - start);
      f(k++) = y.row(j).segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len)).mean();
    }
  }
  return f;
}

void TrainOptions::validate() const {
  if (!(l2_lambda > 0.0)) throw ConfigError("l2_lambda must be > 0");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (patience < 1 || patience > max_epochs) throw ConfigError("patience must lie in [1, max_epochs]");
}

void ModelOptions::validate() const {
  if (csp_pairs < 1) throw ConfigError("csp_pairs must be >= 1");
  if (xdawn_filters < 1) throw ConfigError("xdawn_filters must be >= 1");
  if (xdawn_decim < 1) throw ConfigError("xdawn_decim must be >= 1");
  if (xdawn_target_class != 0 && xdawn_target_class != 1) throw ConfigError("xdawn_target_class must be 0 or 1");
}

double LogRegModel::probability(const Eigen::VectorXd& features) const {
  if (features.size() != weights.size()) {
    throw ConfigError("feature dimension " + std::to_string(features.size()) + " does not match model dimension " +
                      std::to_string(weights.size()));
  }
  const Eigen::VectorXd z = (features - feature_mean).cwiseQuotient(feature_scale);
  return sigmoid(z.dot(weights) + bias);
}

LogisticObjective logistic_objective(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& X,
                                     std::span<const int> y, double l2_lambda) {
  const auto n = static_cast<double>(X.rows());
  const Eigen::VectorXd z = (X * w).array() + b;
  Eigen::VectorXd residual(z.size());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const int yi = y[static_cast<std::size_t>(i)];
    loss += softplus(z(i)) - yi * z(i);
    residual(i) = sigmoid(z(i)) - yi;
  }
  LogisticObjective out;
  out.loss = loss / n + 0.5 * l2_lambda * w.squaredNorm();
  out.grad_w = X.transpose() * residual / n + l2_lambda * w;
  out.grad_b = residual.sum() / n;
  return out;
}

LogRegFit train_logreg(const Eigen::MatrixXd& features, std::span<const int> labels,
                       const Eigen::MatrixXd& val_features, std::span<const int> val_labels,
                       const TrainOptions& opts) {
  opts.validate();
  if (features.rows() == 0 || val_features.rows() == 0) throw ConfigError("empty training or validation features");
  if (static_cast<std::size_t>(features.rows()) != labels.size() ||
      static_cast<std::size_t>(val_features.rows()) != val_labels.size()) {
    throw ConfigError("feature and label counts differ");
  }
  if (features.cols() != val_features.cols()) throw ConfigError("training and validation feature dimensions differ");
  for (int y : labels) {
    if (y != 0 && y != 1) throw ConfigError("logistic regression needs binary labels, got " + std::to_string(y));
  }
  for (int y : val_labels) {
    if (y != 0 && y != 1) throw ConfigError("logistic regression needs binary labels, got " + std::to_string(y));
  }

  const Eigen::Index d = features.cols();
  LogRegModel model;
  model.feature_mean = features.colwise().mean().transpose();
  model.feature_scale.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double sd = std::sqrt((features.col(j).array() - model.feature_mean(j)).square().mean());
    model.feature_scale(j) = sd > 0.0 ? sd : 1.0;
  }
  const Eigen::RowVectorXd mean_row = model.feature_mean.transpose();
  const Eigen::RowVectorXd inv_scale = model.feature_scale.cwiseInverse().transpose();
  const Eigen::MatrixXd X = (features.rowwise() - mean_row).array().rowwise() * inv_scale.array();
  const Eigen::MatrixXd V = (val_features.rowwise() - mean_row).array().rowwise() * inv_scale.array();

  Rng rng(opts.seed);
  Eigen::VectorXd w(d);
  for (Eigen::Index j = 0; j < d; ++j) w(j) = 0.01 * rng.normal();
  double b = 0.0;

  LogRegFit fit;
  LogisticObjective obj = logistic_objective(w, b, X, labels, opts.l2_lambda);
  double best_val = log_loss(w, b, V, val_labels);
  Eigen::VectorXd best_w = w;
  double best_b = b;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= opts.max_epochs; ++epoch) {
    w -= opts.learning_rate * obj.grad_w;
    b -= opts.learning_rate * obj.grad_b;
    obj = logistic_objective(w, b, X, labels, opts.l2_lambda);
    const double val = log_loss(w, b, V, val_labels);
    if (!std::isfinite(obj.loss) || !std::isfinite(val) || !w.allFinite()) {
      throw NumericalError("logistic regression diverged at epoch " + std::to_string(epoch));
    }
    fit.train_loss.push_back(obj.loss);
    fit.val_loss.push_back(val);
    if (val < best_val) {
      best_val = val;
      best_w = w;
      best_b = b;
      fit.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= opts.patience) {
      break;
    }
  }

  model.weights = best_w;
  model.bias = best_b;
  fit.model = std::move(model);
  return fit;
}

Eigen::VectorXd extract_features(const Pipeline& pipeline, const Trial& trial) {
  if (trial.n_channels() != pipeline.filters.n_channels()) {
    throw ConfigError("trial has " + std::to_string(trial.n_channels()) + " channels, model expects " +
                      std::to_string(pipeline.filters.n_channels()));
  }
  return pipeline.feature_kind == FeatureKind::csp_logvar
             ? csp_logvar_features(trial, pipeline.filters)
             : xdawn_features(trial, pipeline.filters, pipeline.decim);
}

Eigen::MatrixXd extract_features(const Pipeline& pipeline, std::span<const Trial> trials) {
  Eigen::MatrixXd out;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const Eigen::VectorXd f = extract_features(pipeline, trials[i]);
    if (i == 0) out.resize(static_cast<Eigen::Index>(trials.size()), f.size());
    if (f.size() != out.cols()) throw ConfigError("inconsistent feature dimensions across trials");
    out.row(static_cast<Eigen::Index>(i)) = f.transpose();
  }
  return out;
}

Prediction predict(const Pipeline& pipeline, const Trial& trial) {
  const Eigen::VectorXd f = extract_features(pipeline, trial);
  Prediction p;
  p.probability = pipeline.lr.probability(f);
  p.label = p.probability >= 0.5 ? 1 : 0;
  return p;
}

Pipeline fit_pipeline(const Dataset& train, const Dataset& val, const ModelOptions& model_opts,
                      const TrainOptions& train_opts) {
  model_opts.validate();
  train_opts.validate();
  if (train.empty()) throw ConfigError("empty training set");
  if (val.empty()) throw ConfigError("empty validation set");

  const std::vector<int> y = labels_of(train.trials);
  const std::vector<int> y_val = labels_of(val.trials);

  Pipeline p;
  p.feature_kind = model_opts.kind;
  if (model_opts.kind == FeatureKind::csp_logvar) {
    p.filters = fit_csp(train.trials, y, model_opts.csp_pairs);
    p.decim = 1;
  } else {
    p.filters = fit_xdawn(train.trials, y, model_opts.xdawn_filters, model_opts.xdawn_target_class);
    p.decim = model_opts.xdawn_decim;
  }

  const Eigen::MatrixXd X = extract_features(p, train.trials);
  const Eigen::MatrixXd V = extract_features(p, val.trials);
  LogRegFit fit = train_logreg(X, y, V, y_val, train_opts);
  p.lr = std::move(fit.model);

  p.diagnostics.best_epoch = fit.best_epoch;
  for (int label : {0, 1}) {
    Eigen::Index first = -1;
    bool identical = true;
    for (std::size_t i = 0; i < y.size() && identical; ++i) {
      if (y[i] != label) continue;
      const auto r = static_cast<Eigen::Index>(i);
      if (first < 0) {
        first = r;
      } else if (X.row(r) != X.row(first)) {
        identical = false;
      }
    }
    if (first >= 0 && identical) p.diagnostics.degenerate = true;
  }
  std::size_t ok = 0;
  for (std::size_t i = 0; i < train.size(); ++i) ok += predict(p, train.trials[i]).label == y[i];
  p.diagnostics.train_accuracy = static_cast<double>(ok) / static_cast<double>(train.size());
  ok = 0;
  for (std::size_t i = 0; i < val.size(); ++i) ok += predict(p, val.trials[i]).label == y_val[i];
  p.diagnostics.val_accuracy = static_cast<double>(ok) / static_cast<double>(val.size());
  return p;
}

}  // namespace npplab
