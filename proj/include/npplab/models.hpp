#pragma once

#include "npplab/signal.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace npplab {

enum class FilterKind : std::uint32_t { csp = 0, xdawn = 1 };
enum class FeatureKind : std::uint32_t { csp_logvar = 0, xdawn_flat = 1 };

const char* to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& s);

struct SpatialFilters {
  Eigen::MatrixXd weights;      // C x F, one filter per column
  Eigen::VectorXd eigenvalues;  // generalized eigenvalue of each column
  FilterKind kind = FilterKind::csp;
  // xDAWN only: the leading eigenvalue is indistinguishable from what an
  // average of pure noise trials would produce.
  bool low_separation = false;

  std::size_t n_channels() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t n_filters() const { return static_cast<std::size_t>(weights.cols()); }
};

// Ridge added to every covariance before solving: kCovRidge * trace / C.
inline constexpr double kCovRidge = 1e-6;

// Trace-normalized mean covariance of the trials with the given label.
Eigen::MatrixXd class_covariance(std::span<const Trial> trials, std::span<const int> labels, int label);

// Common spatial patterns for labels {0, 1}. Solves
//   S0 w = lambda (S0 + S1) w
// and keeps the n_pairs largest- then the n_pairs smallest-eigenvalue vectors
// (eigenvalues descend across columns, the last column has the smallest),
// normalized so that W^T (S0 + S1) W = I.
SpatialFilters fit_csp(std::span<const Trial> trials, std::span<const int> labels, std::size_t n_pairs);

// f_j = log(var(w_j^T X)).
Eigen::VectorXd csp_logvar_features(const Trial& trial, const SpatialFilters& filters);

// xDAWN: leading generalized eigenvectors of (evoked covariance, data covariance),
// where the evoked response is the average trial of target_class.
SpatialFilters fit_xdawn(std::span<const Trial> trials, std::span<const int> labels, std::size_t n_filters,
                         int target_class = 1);

// Spatially filtered trial, averaged over blocks of `decim` samples (the last
// block may be shorter), flattened filter-major: length F * ceil(S / decim).
Eigen::VectorXd xdawn_features(const Trial& trial, const SpatialFilters& filters, std::size_t decim);

struct TrainOptions {
  double l2_lambda = 1e-3;
  std::size_t max_epochs = 400;
  double learning_rate = 0.5;
  std::size_t patience = 30;
  std::uint64_t seed = 1;

  void validate() const;
};

struct LogRegModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;

  std::size_t dim() const { return static_cast<std::size_t>(weights.size()); }
  // P(class 1 | raw feature vector).
  double probability(const Eigen::VectorXd& features) const;
};

struct LogisticObjective {
  double loss = 0.0;
  Eigen::VectorXd grad_w;
  double grad_b = 0.0;
};

// Mean binary cross-entropy plus (l2_lambda / 2) ||w||^2; the bias is not
// penalized. X holds one (already standardized) sample per row.
LogisticObjective logistic_objective(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& X,
                                     std::span<const int> y, double l2_lambda);

struct LogRegFit {
  LogRegModel model;
  std::vector<double> train_loss;  // objective after each epoch
  std::vector<double> val_loss;    // validation log-loss after each epoch
  std::size_t best_epoch = 0;
};

// Full-batch gradient descent on standardized features. Early-stops once the
// validation log-loss has not improved for `patience` epochs and returns the
// best-validation parameters.
LogRegFit train_logreg(const Eigen::MatrixXd& features, std::span<const int> labels,
                       const Eigen::MatrixXd& val_features, std::span<const int> val_labels,
                       const TrainOptions& opts);

inline LogRegModel fit_logreg(const Eigen::MatrixXd& features, std::span<const int> labels,
                              const Eigen::MatrixXd& val_features, std::span<const int> val_labels,
                              const TrainOptions& opts) {
  return train_logreg(features, labels, val_features, val_labels, opts).model;
}

struct ModelOptions {
  FeatureKind kind = FeatureKind::csp_logvar;
  std::size_t csp_pairs = 3;
  std::size_t xdawn_filters = 4;
  std::size_t xdawn_decim = 8;
  int xdawn_target_class = 1;

  void validate() const;
};

struct PipelineDiagnostics {
  // Some class has identical feature vectors for all of its training trials.
  bool degenerate = false;
  std::size_t best_epoch = 0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
};

struct Pipeline {
  SpatialFilters filters;
  FeatureKind feature_kind = FeatureKind::csp_logvar;
  std::size_t decim = 1;
  LogRegModel lr;
  int n_classes = 2;
  PipelineDiagnostics diagnostics;
};

struct Prediction {
  int label = 0;
  double probability = 0.5;  // P(class 1)
};

Eigen::VectorXd extract_features(const Pipeline& pipeline, const Trial& trial);
Eigen::MatrixXd extract_features(const Pipeline& pipeline, std::span<const Trial> trials);

// Class 1 iff P(class 1) >= 0.5.
Prediction predict(const Pipeline& pipeline, const Trial& trial);

Pipeline fit_pipeline(const Dataset& train, const Dataset& val, const ModelOptions& model_opts,
                      const TrainOptions& train_opts);

std::vector<int> labels_of(std::span<const Trial> trials);

}  // namespace npplab
