// Copyright 2026 The DEPAS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DEPAS_METRICS_HPP
#define DEPAS_METRICS_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "depas/mask.hpp"
#include "depas/tensor.hpp"

namespace depas::metrics {

struct FeatureExtractorSpec {
  enum class Kind { kFixedSeedConv, kExternalImport };
  Kind kind = Kind::kFixedSeedConv;
  std::size_t output_dim = 64;
  std::uint64_t seed = 0;

  [[nodiscard]] std::string kind_name() const;
  [[nodiscard]] std::string id() const;
};

// Frozen, randomly initialized convolutional stack (three k4/s2 convolutions
// with LeakyReLU, a 1x1 convolution to `output_dim` channels) followed by
// global average pooling. Rows of the result are images.
[[nodiscard]] Eigen::MatrixXd extract_features(const Tensor& images, const FeatureExtractorSpec& spec);

struct DistributionSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  std::size_t count = 0;
};

// Sample mean and unbiased covariance of feature rows.
[[nodiscard]] DistributionSummary summarize(const Eigen::MatrixXd& features);

// |mu_a - mu_b|^2 + Tr(C_a + C_b - 2 (C_a C_b)^{1/2}), with the root trace taken
// from the eigenvalues of C_a^{1/2} C_b C_a^{1/2}. Small negative eigenvalues
// (within 1e-8 of the spectrum scale) are clamped; larger ones throw.
[[nodiscard]] double frechet_distance(const DistributionSummary& a, const DistributionSummary& b);

enum class ProjectionMethod { kPca, kExternalImport };

// Top-2 principal-axis coordinates of centred features; each axis is signed
// so its largest-magnitude loading is positive. `seed` is recorded only,
// since PCA is deterministic.
[[nodiscard]] Eigen::MatrixXd project_2d(const Eigen::MatrixXd& features, ProjectionMethod method = ProjectionMethod::kPca,
                                         std::uint64_t seed = 0);

// Two-sample KS statistic sup_t |F_a(t) - F_b(t)| over merged sorted samples.
[[nodiscard]] double ks_statistic_1d(std::span<const double> a, std::span<const double> b);
// Per-column KS statistic of two point clouds, maximised over columns.
[[nodiscard]] double ks_statistic(const Eigen::MatrixXd& points_a, const Eigen::MatrixXd& points_b);

inline constexpr std::size_t kDefaultKlBins = 32;
inline constexpr double kDefaultKlSmoothing = 1e-10;

// sum p ln(p/q) after adding `smoothing` to every bin and renormalising.
[[nodiscard]] double kl_from_histograms(std::span<const double> p, std::span<const double> q,
                                        double smoothing = kDefaultKlSmoothing);
// Joint histogram of 2-D points over the union bounding box, bins x bins.
[[nodiscard]] std::vector<double> histogram_2d(const Eigen::MatrixXd& points, const Eigen::Vector2d& lo,
                                               const Eigen::Vector2d& hi, std::size_t bins);
[[nodiscard]] double kl_divergence(const Eigen::MatrixXd& points_a, const Eigen::MatrixXd& points_b,
                                   std::size_t bins = kDefaultKlBins, double smoothing = kDefaultKlSmoothing);

// Fraction of pixels within eps of a hard label (binary: p <= eps or
// p >= 1 - eps; multilabel: max channel >= 1 - eps).
[[nodiscard]] double discreteness_score(const SoftMask& soft, double eps);

struct MetricReport {
  double fid = 0.0;
  double ks = 0.0;
  double kl = 0.0;
  FeatureExtractorSpec extractor;
  std::string projection = "pca";
  std::size_t kl_bins = kDefaultKlBins;
  double kl_smoothing = kDefaultKlSmoothing;
  std::size_t real_count = 0;
  std::size_t synthetic_count = 0;

  [[nodiscard]] std::string to_json() const;
  [[nodiscard]] static std::string csv_header();
  [[nodiscard]] std::string to_csv_row() const;
};

// FID on extracted features, KS and KL on the joint 2-D PCA projection.
[[nodiscard]] MetricReport evaluate_features(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic,
                                             const FeatureExtractorSpec& spec, std::size_t kl_bins = kDefaultKlBins,
                                             double kl_smoothing = kDefaultKlSmoothing);

// "# dim=<d> source=<tag>" header line, then comma-separated rows.
void write_feature_csv(const std::filesystem::path& path, const Eigen::MatrixXd& rows, const std::string& source);
struct FeatureTable {
  Eigen::MatrixXd rows;
  std::string source;
};
[[nodiscard]] FeatureTable read_feature_csv(const std::filesystem::path& path);

}  // namespace depas::metrics

#endif  // DEPAS_METRICS_HPP
