#include "driftforge/stats.h"

#include <cmath>
#include <limits>

#include "driftforge/error.h"
#include "driftforge/parallel.h"

namespace driftforge {

SourceFeatureStats::SourceFeatureStats(Eigen::VectorXd mu, Eigen::MatrixXd sigma,
                                       double d_min, double d_max,
                                       double epsilon, double shrinkage)
    : mu_(std::move(mu)),
      sigma_(std::move(sigma)),
      d_min_(d_min),
      d_max_(d_max),
      epsilon_(epsilon),
      shrinkage_(shrinkage) {
  if (sigma_.rows() != mu_.size() || sigma_.cols() != mu_.size()) {
    throw ValidationError("covariance shape does not match the mean");
  }
  if (!sigma_.isApprox(sigma_.transpose(), 1e-12)) {
    throw NumericError("covariance is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sigma_);
  if (llt.info() != Eigen::Success) {
    throw NumericError("covariance is not positive definite after regularization");
  }
  chol_ = llt.matrixL();
  if (!(epsilon_ > 0.0)) throw ValidationError("epsilon must be positive");
  set_range(d_min, d_max);
}

void SourceFeatureStats::set_range(double d_min, double d_max) {
  if (!(d_min >= 0.0 && d_min <= d_max)) {
    throw ValidationError("distance range must satisfy 0 <= d_min <= d_max");
  }
  d_min_ = d_min;
  d_max_ = d_max;
}

SourceFeatureStats fit_feature_stats(const EmbeddingMatrix& source,
                                     double shrinkage, double epsilon) {
  const auto n = source.rows();
  const auto d = source.dim();
  if (n < 2) throw ValidationError("need at least 2 source embeddings, got " +
                                   std::to_string(n));
  if (d == 0) throw ValidationError("embedding dimension is zero");
  if (!(shrinkage >= 0.0 && shrinkage <= 1.0)) {
    throw ConfigError("shrinkage must lie in [0, 1]");
  }
  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = source.row(i);
    for (std::size_t j = 0; j < d; ++j) x(i, j) = r[j];
  }
  Eigen::VectorXd mu = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - mu.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  cov = (cov + cov.transpose()) * 0.5;
  if (shrinkage > 0.0) {
    // A zero-trace sample covariance (all rows equal) shrinks toward I.
    double scale = cov.trace() / static_cast<double>(d);
    if (!(scale > 0.0)) scale = 1.0;
    cov = (1.0 - shrinkage) * cov;
    cov.diagonal().array() += shrinkage * scale;
  }
  SourceFeatureStats stats(std::move(mu), std::move(cov), 0.0, 0.0, epsilon, shrinkage);
  std::vector<double> dist(n);
  parallel_for(n, [&](std::size_t i) { dist[i] = mahalanobis(source.row(i), stats); });
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (double v : dist) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  stats.set_range(lo, hi);
  return stats;
}

double mahalanobis(const Eigen::VectorXd& x, const SourceFeatureStats& stats) {
  if (static_cast<std::size_t>(x.size()) != stats.dim()) {
    throw ValidationError("dimension mismatch: vector has " + std::to_string(x.size()) +
                          ", stats have " + std::to_string(stats.dim()));
  }
  const Eigen::VectorXd diff = x - stats.mu();
  const Eigen::VectorXd y =
      stats.sigma_chol().triangularView<Eigen::Lower>().solve(diff);
  return y.norm();
}

double mahalanobis(std::span<const float> x, const SourceFeatureStats& stats) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v(static_cast<Eigen::Index>(i)) = x[i];
  return mahalanobis(v, stats);
}

ConceptStats fit_concept_stats(const std::vector<Document>& source_docs,
                               const ConceptMatcher& matcher, double epsilon) {
  if (source_docs.empty()) throw ValidationError("no source documents for concept stats");
  std::vector<std::vector<std::string>> per_doc(source_docs.size());
  parallel_for(source_docs.size(), [&](std::size_t i) {
    per_doc[i] = matcher.match(source_docs[i].text).concept_ids;
  });
  ConceptStats stats;
  stats.n_docs = source_docs.size();
  stats.epsilon = epsilon;
  for (const auto& ids : per_doc) {
    for (const auto& id : ids) ++stats.freq[id];
  }
  return stats;
}

double surprisal(const std::string& concept_id, const ConceptStats& stats) {
  const double f = static_cast<double>(stats.frequency(concept_id));
  const double n = static_cast<double>(stats.n_docs);
  // Near p = 1 the result is tiny and log(p + eps) would lose it to rounding;
  // (f - n) / n is exact enough for log1p.
  if (2 * f > n) return -std::log1p((f - n) / n + stats.epsilon);
  return -std::log(f / n + stats.epsilon);
}

// Layout after the magic:
//   u32 has_feature
//     u32 d, f64 shrinkage, f64 epsilon, f64 d_min, f64 d_max,
//     d f64 mu, d*d f64 sigma (row-major)
//   u32 has_concepts
//     u32 n_docs, f64 epsilon, u32 count, count x (string id, u32 freq)
//   optional: string metadata (absent in files without it)
std::string encode_stats(const SourceStats& stats) {
  std::string out = "DFSTA1";
  le::put_u32(out, stats.feature ? 1 : 0);
  if (stats.feature) {
    const auto& f = *stats.feature;
    le::put_u32(out, static_cast<std::uint32_t>(f.dim()));
    le::put_f64(out, f.shrinkage());
    le::put_f64(out, f.epsilon());
    le::put_f64(out, f.d_min());
    le::put_f64(out, f.d_max());
    for (Eigen::Index i = 0; i < f.mu().size(); ++i) le::put_f64(out, f.mu()(i));
    for (Eigen::Index i = 0; i < f.sigma().rows(); ++i) {
      for (Eigen::Index j = 0; j < f.sigma().cols(); ++j) le::put_f64(out, f.sigma()(i, j));
    }
  }
  le::put_u32(out, stats.concepts ? 1 : 0);
  if (stats.concepts) {
    const auto& c = *stats.concepts;
    le::put_u32(out, static_cast<std::uint32_t>(c.n_docs));
    le::put_f64(out, c.epsilon);
    le::put_u32(out, static_cast<std::uint32_t>(c.freq.size()));
    for (const auto& [id, f] : c.freq) {
      le::put_string(out, id);
      le::put_u32(out, static_cast<std::uint32_t>(f));
    }
  }
  if (!stats.meta.empty()) le::put_string(out, stats.meta);
  return out;
}

SourceStats decode_stats(std::string_view bytes) {
  le::Reader r(bytes);
  if (r.raw(6) != "DFSTA1") throw ParseError("bad magic, expected DFSTA1");
  SourceStats stats;
  if (r.u32() != 0) {
    const std::uint32_t d = r.u32();
    const double shrinkage = r.f64();
    const double epsilon = r.f64();
    const double d_min = r.f64();
    const double d_max = r.f64();
    Eigen::VectorXd mu(d);
    for (std::uint32_t i = 0; i < d; ++i) mu(i) = r.f64();
    Eigen::MatrixXd sigma(d, d);
    for (std::uint32_t i = 0; i < d; ++i) {
      for (std::uint32_t j = 0; j < d; ++j) sigma(i, j) = r.f64();
    }
    stats.feature.emplace(std::move(mu), std::move(sigma), d_min, d_max, epsilon,
                          shrinkage);
  }
  if (r.u32() != 0) {
    ConceptStats c;
    c.n_docs = r.u32();
    c.epsilon = r.f64();
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
      std::string id = r.string();
      c.freq[std::move(id)] = r.u32();
    }
    if (c.n_docs == 0) throw ParseError("concept stats with zero documents");
    stats.concepts = std::move(c);
  }
  if (!r.done()) stats.meta = r.string();
  if (!r.done()) throw ParseError("trailing bytes in stats file");
  return stats;
}

void write_stats(const std::string& path, const SourceStats& stats) {
  write_binary_file(path, encode_stats(stats));
}

SourceStats read_stats(const std::string& path) {
  return decode_stats(read_binary_file(path));
}

}  // namespace driftforge
