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

#include "depas/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>

#include "depas/errors.hpp"
#include "depas/io.hpp"
#include "depas/nn.hpp"

namespace depas::metrics {

namespace {

constexpr std::size_t kChunk = 32;

// Eigen solver on a symmetrised copy; throws on eigenvalues below
// -1e-8 * max(1, spectral scale) and clamps the remaining negatives to 0.
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> psd_eigen(const Eigen::MatrixXd& m, const char* what) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericalError(std::string(what) + ": eigendecomposition failed");
  const auto& ev = solver.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -1e-8 * scale) {
    std::ostringstream os;
    os << what << ": not positive semi-definite (min eigenvalue " << ev.minCoeff() << ", max " << ev.maxCoeff()
       << ")";
    throw NumericalError(os.str());
  }
  return solver;
}

double h_term(double p, double q) {
  // q * (r ln r - r + 1) with r = p / q; non-negative termwise.
  const double t = p / q - 1.0;
  if (std::abs(t) < 1e-4) return q * t * t * (0.5 - t / 6.0 + t * t / 12.0);
  return p * std::log(p / q) - p + q;
}

}  // namespace

std::string FeatureExtractorSpec::kind_name() const {
  return kind == Kind::kFixedSeedConv ? "fixed-seed-conv" : "external-import";
}

std::string FeatureExtractorSpec::id() const {
  return kind_name() + ":d" + std::to_string(output_dim) + ":s" + std::to_string(seed);
}

Eigen::MatrixXd extract_features(const Tensor& images, const FeatureExtractorSpec& spec) {
  if (spec.kind != FeatureExtractorSpec::Kind::kFixedSeedConv) {
    throw InvalidArgument("extract_features: external features must be imported with read_feature_csv");
  }
  if (images.n() < 2) throw InvalidInput("extract_features: need at least two images for a covariance");
  if (spec.output_dim == 0) throw InvalidArgument("extract_features: output_dim must be positive");

  nn::Rng rng(spec.seed);
  const nn::ConvGeometry down{4, 2, 1};
  std::vector<nn::Conv2d> convs;
  std::size_t in = images.c();
  std::size_t h = images.h();
  for (std::size_t ch : {16u, 32u, 64u}) {
    if (h < 2) break;
    convs.emplace_back("extract.conv" + std::to_string(convs.size()), in, ch, down);
    nn::fill_normal(convs.back().weight().value, rng, 0.0, std::sqrt(2.0 / static_cast<double>(in * 16)));
    in = ch;
    h /= 2;
  }
  nn::Conv2d head("extract.head", in, spec.output_dim, nn::ConvGeometry{1, 1, 0});
  nn::fill_normal(head.weight().value, rng, 0.0, std::sqrt(2.0 / static_cast<double>(in)));
  nn::LeakyRelu act(0.2);

  Eigen::MatrixXd features(static_cast<long>(images.n()), static_cast<long>(spec.output_dim));
  for (std::size_t start = 0; start < images.n(); start += kChunk) {
    const std::size_t count = std::min(kChunk, images.n() - start);
    Tensor x(count, images.c(), images.h(), images.w());
    std::copy_n(images.data() + start * images.sample_size(), count * images.sample_size(), x.data());
    for (auto& c : convs) x = act.forward(c.forward(x));
    x = act.forward(head.forward(x));
    const std::size_t plane = x.plane_size();
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t d = 0; d < spec.output_dim; ++d) {
        double s = 0.0;
        const double* p = x.data() + (i * spec.output_dim + d) * plane;
        for (std::size_t k = 0; k < plane; ++k) s += p[k];
        features(static_cast<long>(start + i), static_cast<long>(d)) = s / static_cast<double>(plane);
      }
    }
  }
  return features;
}

DistributionSummary summarize(const Eigen::MatrixXd& features) {
  if (features.rows() < 2) throw InvalidInput("summarize: need at least two rows");
  DistributionSummary s;
  s.count = static_cast<std::size_t>(features.rows());
  s.mean = features.colwise().mean().transpose();
  const Eigen::MatrixXd centred = features.rowwise() - s.mean.transpose();
  s.covariance = (centred.transpose() * centred) / static_cast<double>(features.rows() - 1);
  return s;
}

double frechet_distance(const DistributionSummary& a, const DistributionSummary& b) {
  if (a.mean.size() != b.mean.size() || a.covariance.rows() != b.covariance.rows() ||
      a.covariance.rows() != a.mean.size()) {
    throw InvalidInput("frechet_distance: dimension mismatch");
  }
  const auto ea = psd_eigen(a.covariance, "frechet_distance covariance a");
  (void)psd_eigen(b.covariance, "frechet_distance covariance b");
  const Eigen::VectorXd root = ea.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd sqrt_a = ea.eigenvectors() * root.asDiagonal() * ea.eigenvectors().transpose();
  const Eigen::MatrixXd inner = sqrt_a * b.covariance * sqrt_a;
  const auto em = psd_eigen(inner, "frechet_distance cross term");
  const double trace_root = em.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const double value = mean_term + a.covariance.trace() + b.covariance.trace() - 2.0 * trace_root;
  return std::max(0.0, value);
}

Eigen::MatrixXd project_2d(const Eigen::MatrixXd& features, ProjectionMethod method, std::uint64_t /*seed*/) {
  if (method != ProjectionMethod::kPca) {
    throw InvalidArgument("project_2d: external projections must be imported with read_feature_csv");
  }
  if (features.rows() < 3) throw InvalidInput("project_2d: need at least three rows");
  const Eigen::RowVectorXd mean = features.colwise().mean();
  const Eigen::MatrixXd centred = features.rowwise() - mean;
  if (centred.cwiseAbs().maxCoeff() == 0.0) throw InvalidInput("project_2d: degenerate input (rank 0)");
  const Eigen::MatrixXd cov = (centred.transpose() * centred) / static_cast<double>(features.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericalError("project_2d: eigendecomposition failed");
  const long d = cov.rows();
  Eigen::MatrixXd axes = Eigen::MatrixXd::Zero(d, 2);
  for (long k = 0; k < std::min<long>(2, d); ++k) {
    Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - k);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    axes.col(k) = v;
  }
  return centred * axes;
}

double ks_statistic_1d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InvalidInput("ks_statistic: need at least two samples per set");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const auto n = static_cast<double>(sa.size());
  const auto m = static_cast<double>(sb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double best = 0.0;
  while (i < sa.size() || j < sb.size()) {
    double t;
    if (j >= sb.size() || (i < sa.size() && sa[i] <= sb[j])) {
      t = sa[i];
    } else {
      t = sb[j];
    }
    while (i < sa.size() && sa[i] <= t) ++i;
    while (j < sb.size() && sb[j] <= t) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return best;
}

double ks_statistic(const Eigen::MatrixXd& points_a, const Eigen::MatrixXd& points_b) {
  if (points_a.cols() != points_b.cols() || points_a.cols() == 0) throw InvalidInput("ks_statistic: column mismatch");
  double best = 0.0;
  for (long c = 0; c < points_a.cols(); ++c) {
    const Eigen::VectorXd ca = points_a.col(c);
    const Eigen::VectorXd cb = points_b.col(c);
    best = std::max(best, ks_statistic_1d({ca.data(), static_cast<std::size_t>(ca.size())},
                                          {cb.data(), static_cast<std::size_t>(cb.size())}));
  }
  return best;
}

double kl_from_histograms(std::span<const double> p, std::span<const double> q, double smoothing) {
  if (p.size() != q.size() || p.empty()) throw InvalidInput("kl_from_histograms: bin count mismatch");
  if (!(smoothing > 0.0)) throw InvalidArgument("kl_from_histograms: smoothing must be positive");
  double sp = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw InvalidInput("kl_from_histograms: negative bin mass");
    sp += p[i] + smoothing;
    sq += q[i] + smoothing;
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) kl += h_term((p[i] + smoothing) / sp, (q[i] + smoothing) / sq);
  return kl;
}

std::vector<double> histogram_2d(const Eigen::MatrixXd& points, const Eigen::Vector2d& lo, const Eigen::Vector2d& hi,
                                 std::size_t bins) {
  if (points.cols() != 2) throw InvalidInput("histogram_2d: points must have two columns");
  std::vector<double> hist(bins * bins, 0.0);
  auto index = [&](double v, int axis) {
    const double width = hi(axis) - lo(axis);
    const double rel = width > 0.0 ? (v - lo(axis)) / width : 0.0;
    const auto k = static_cast<long>(std::floor(rel * static_cast<double>(bins)));
    return static_cast<std::size_t>(std::clamp<long>(k, 0, static_cast<long>(bins) - 1));
  };
  for (long r = 0; r < points.rows(); ++r) hist[index(points(r, 0), 0) * bins + index(points(r, 1), 1)] += 1.0;
  const double inv = 1.0 / static_cast<double>(points.rows());
  for (auto& v : hist) v *= inv;
  return hist;
}

double kl_divergence(const Eigen::MatrixXd& points_a, const Eigen::MatrixXd& points_b, std::size_t bins,
                     double smoothing) {
  if (points_a.rows() < 2 || points_b.rows() < 2) throw InvalidInput("kl_divergence: need at least two points");
  if (points_a.cols() != 2 || points_b.cols() != 2) throw InvalidInput("kl_divergence: points must be 2-D");
  if (bins == 0) throw InvalidArgument("kl_divergence: bins must be positive");
  const Eigen::Vector2d lo = points_a.colwise().minCoeff().cwiseMin(points_b.colwise().minCoeff()).transpose();
  const Eigen::Vector2d hi = points_a.colwise().maxCoeff().cwiseMax(points_b.colwise().maxCoeff()).transpose();
  const auto p = histogram_2d(points_a, lo, hi, bins);
  const auto q = histogram_2d(points_b, lo, hi, bins);
  return kl_from_histograms(p, q, smoothing);
}

double discreteness_score(const SoftMask& soft, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw InvalidArgument("discreteness_score: eps must lie in (0, 0.5)");
  const std::size_t pixels = soft.pixels();
  if (pixels == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t p = 0; p < pixels; ++p) {
    if (soft.channels == 1) {
      const double v = soft.values[p];
      if (v <= eps || v >= 1.0 - eps) ++hits;
    } else {
      double mx = 0.0;
      for (std::size_t c = 0; c < soft.channels; ++c) mx = std::max(mx, soft.values[c * pixels + p]);
      if (mx >= 1.0 - eps) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(pixels);
}

std::string MetricReport::to_json() const {
  nlohmann::json j{{"fid", fid},
                   {"ks", ks},
                   {"kl", kl},
                   {"extractor",
                    {{"kind", extractor.kind_name()},
                     {"output_dim", extractor.output_dim},
                     {"seed", extractor.seed},
                     {"id", extractor.id()}}},
                   {"projection", projection},
                   {"kl_grid", {{"bins_per_axis", kl_bins}, {"smoothing", kl_smoothing}, {"range", "union-bbox"}}},
                   {"ks_aggregation", "max-over-axes"},
                   {"real_count", real_count},
                   {"synthetic_count", synthetic_count}};
  return j.dump(2) + "\n";
}

std::string MetricReport::csv_header() {
  return "fid,ks,kl,extractor,projection,kl_bins,kl_smoothing,real_count,synthetic_count";
}

std::string MetricReport::to_csv_row() const {
  std::ostringstream os;
  os << std::setprecision(17) << fid << "," << ks << "," << kl << "," << extractor.id() << "," << projection << ","
     << kl_bins << "," << kl_smoothing << "," << real_count << "," << synthetic_count;
  return os.str();
}

MetricReport evaluate_features(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic,
                               const FeatureExtractorSpec& spec, std::size_t kl_bins, double kl_smoothing) {
  if (real.cols() != synthetic.cols()) throw InvalidInput("evaluate_features: feature dimension mismatch");
  MetricReport r;
  r.extractor = spec;
  r.kl_bins = kl_bins;
  r.kl_smoothing = kl_smoothing;
  r.real_count = static_cast<std::size_t>(real.rows());
  r.synthetic_count = static_cast<std::size_t>(synthetic.rows());
  r.fid = frechet_distance(summarize(real), summarize(synthetic));

  Eigen::MatrixXd joint(real.rows() + synthetic.rows(), real.cols());
  joint << real, synthetic;
  Eigen::MatrixXd proj;
  if (joint.cwiseAbs().maxCoeff() == 0.0 || (joint.rowwise() - joint.colwise().mean()).cwiseAbs().maxCoeff() == 0.0) {
    proj = Eigen::MatrixXd::Zero(joint.rows(), 2);
  } else {
    proj = project_2d(joint);
  }
  const Eigen::MatrixXd pa = proj.topRows(real.rows());
  const Eigen::MatrixXd pb = proj.bottomRows(synthetic.rows());
  r.ks = ks_statistic(pa, pb);
  r.kl = kl_divergence(pa, pb, kl_bins, kl_smoothing);
  return r;
}

void write_feature_csv(const std::filesystem::path& path, const Eigen::MatrixXd& rows, const std::string& source) {
  std::ostringstream os;
  os << "# dim=" << rows.cols() << " source=" << source << "\n" << std::setprecision(17);
  for (long r = 0; r < rows.rows(); ++r) {
    for (long c = 0; c < rows.cols(); ++c) os << (c ? "," : "") << rows(r, c);
    os << "\n";
  }
  io::write_text(path, os.str());
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  std::istringstream in(io::read_text(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("# dim=", 0) != 0) {
    throw IoError(path.string() + ": missing '# dim=<d> source=<tag>' header");
  }
  FeatureTable t;
  long dim = 0;
  {
    std::istringstream hs(line.substr(6));
    hs >> dim;
    std::string rest;
    hs >> rest;
    if (rest.rfind("source=", 0) == 0) t.source = rest.substr(7);
  }
  if (dim <= 0) throw IoError(path.string() + ": invalid dim in header");
  std::vector<double> values;
  long rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    long cols = 0;
    while (std::getline(ls, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError(path.string() + ": non-numeric cell '" + cell + "' on row " + std::to_string(rows + 1));
      }
      ++cols;
    }
    if (cols != dim) throw IoError(path.string() + ": row " + std::to_string(rows + 1) + " has wrong column count");
    ++rows;
  }
  t.rows = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), rows, dim);
  return t;
}

}  // namespace depas::metrics
