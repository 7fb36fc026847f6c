#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "neuroprobe/binio.hpp"
#include "neuroprobe/tensor.hpp"

namespace neuroprobe {

/// N x d feature matrix (row-major floats) plus a free-form source tag.
struct FeatureSet {
    std::size_t count = 0;
    std::size_t dim = 0;
    std::vector<float> data;
    std::string source;

    std::span<const float> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
    void validate() const;
};

struct GaussianStats {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

// Sample mean and unbiased (N-1) covariance. Requires N >= 2.
GaussianStats gaussian_stats(const FeatureSet& f);

/// Symmetric PSD square root via eigendecomposition.
///
/// Throws NumericError if `a` is asymmetric by more than 1e-6 (relative to
/// max(1, max|a|)) or has an eigenvalue below -1e-8 * max(1, largest
/// eigenvalue); smaller negative eigenvalues are clamped to 0.
Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& a);

inline constexpr double kFidRegularizer = 1e-6;

// Frechet distance between two Gaussians; kFidRegularizer is added to both
// covariance diagonals and a negative round-off result is clamped to 0.
double fid_from_stats(const GaussianStats& a, const GaussianStats& b);

// Requires equal dimensions and N >= d+1 in both sets.
double fid(const FeatureSet& real, const FeatureSet& fake);

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
};

// Distance from every point to its k-th nearest neighbour within the same
// set, excluding itself. Exhaustive Euclidean distances in double.
std::vector<double> knn_radii(const FeatureSet& f, std::size_t k);

// k-NN manifold precision (fakes inside the real manifold) and recall (reals
// inside the fake manifold). Requires 1 <= k < min(N_real, N_fake).
PrecisionRecall precision_recall(const FeatureSet& real, const FeatureSet& fake, std::size_t k);

struct RealismResult {
    std::vector<double> scores;  // one per fake sample
    double mean = 0.0;
    double stddev = 0.0;         // population standard deviation
    std::size_t capped = 0;      // samples that hit kRealismCap
};

inline constexpr double kRealismDistanceFloor = 1e-12;
inline constexpr double kRealismCap = 1e6;

// score(g) = max over reals r of radius_k(r) / max(|g - r|, 1e-12), capped at 1e6.
RealismResult realism_score(const FeatureSet& real, const FeatureSet& fake, std::size_t k);

// "mean±std" with four decimals, e.g. "1.0911±0.0712".
std::string format_mean_std(double mean, double stddev);

/// Desk-scale embedding: Rec. 601 luminance of each 3 x H x W image,
/// box-averaged onto a side x side grid (bin y covers rows
/// [y*H/side, (y+1)*H/side)), flattened row-major.
FeatureSet pixel_features(std::span<const Tensor3> images, std::size_t side);

struct MetricReport {
    std::size_t k = 3;
    std::optional<double> fid;
    std::optional<PrecisionRecall> pr;
    std::optional<RealismResult> realism;

    nlohmann::json to_json() const;
};

// FTS1: "FTS1" | u32 LE header length | JSON {count, dim, source} | f32 LE rows.
Bytes write_fts(const FeatureSet& f);
FeatureSet read_fts(std::span<const std::uint8_t> bytes, const std::string& context = "FTS1");

}  // namespace neuroprobe
