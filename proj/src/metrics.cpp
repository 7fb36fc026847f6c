#include "neuroprobe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "neuroprobe/error.hpp"
#include "neuroprobe/parallel.hpp"

namespace neuroprobe {

void FeatureSet::validate() const {
    if (data.size() != count * dim) {
        throw ShapeError("feature set holds " + std::to_string(data.size()) + " values, expected " +
                         std::to_string(count * dim));
    }
    for (float v : data) {
        if (!std::isfinite(v)) throw NumericError("feature set '" + source + "' contains a non-finite value");
    }
}

GaussianStats gaussian_stats(const FeatureSet& f) {
    f.validate();
    if (f.count < 2) throw NumericError("covariance needs at least 2 samples");
    const Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
        f.data.data(), static_cast<Eigen::Index>(f.count), static_cast<Eigen::Index>(f.dim));
    const Eigen::MatrixXd x = m.cast<double>();
    GaussianStats s;
    s.mean = x.colwise().mean().transpose();
    const Eigen::MatrixXd centered = x.rowwise() - s.mean.transpose();
    s.cov = (centered.transpose() * centered) / static_cast<double>(f.count - 1);
    s.cov = 0.5 * (s.cov + s.cov.transpose());
    return s;
}

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> checked_eigen(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw ShapeError("matrix must be square");
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-6 * scale) {
        throw NumericError("matrix is not symmetric within 1e-6");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
    if (es.info() != Eigen::Success) throw NumericError("eigendecomposition did not converge");
    const double top = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -1e-8 * top) {
        throw NumericError("matrix is not positive semi-definite (eigenvalue " +
                           std::to_string(es.eigenvalues().minCoeff()) + ")");
    }
    return es;
}

}  // namespace

Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& a) {
    const auto es = checked_eigen(a);
    const Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd s = es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (s + s.transpose());
}

double fid_from_stats(const GaussianStats& a, const GaussianStats& b) {
    if (a.mean.size() != b.mean.size() || a.cov.rows() != b.cov.rows()) {
        throw ShapeError("FID inputs have different dimensions");
    }
    const auto d = a.cov.rows();
    const Eigen::MatrixXd reg = kFidRegularizer * Eigen::MatrixXd::Identity(d, d);
    const Eigen::MatrixXd c1 = a.cov + reg;
    const Eigen::MatrixXd c2 = b.cov + reg;
    const Eigen::MatrixXd root1 = matrix_sqrt_psd(c1);
    Eigen::MatrixXd inner = root1 * c2 * root1;
    inner = 0.5 * (inner + inner.transpose());
    const auto es = checked_eigen(inner);
    const double trace_root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    const double value = (a.mean - b.mean).squaredNorm() + c1.trace() + c2.trace() - 2.0 * trace_root;
    return std::max(0.0, value);
}

double fid(const FeatureSet& real, const FeatureSet& fake) {
    if (real.dim != fake.dim) throw ShapeError("FID feature dimensions differ");
    for (const FeatureSet* f : {&real, &fake}) {
        if (f->count < f->dim + 1) {
            throw NumericError("FID needs N >= d+1 samples (" + f->source + " has N=" + std::to_string(f->count) +
                               ", d=" + std::to_string(f->dim) + ")");
        }
    }
    return fid_from_stats(gaussian_stats(real), gaussian_stats(fake));
}

namespace {

double distance(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += d * d;
    }
    return std::sqrt(s);
}

void check_k(const FeatureSet& f, std::size_t k, const char* what) {
    if (k == 0 || k >= f.count) {
        throw ContractError(std::string("k must be in [1, N) for the ") + what + " set (k=" + std::to_string(k) +
                            ", N=" + std::to_string(f.count) + ")");
    }
}

// Fraction of `queries` within the k-NN radius of at least one `manifold` point.
double coverage(const FeatureSet& manifold, const std::vector<double>& radii, const FeatureSet& queries) {
    std::vector<std::uint8_t> covered(queries.count, 0);
    parallel_chunks(queries.count, default_thread_count(), [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t q = begin; q < end; ++q) {
            for (std::size_t m = 0; m < manifold.count; ++m) {
                if (distance(queries.row(q), manifold.row(m)) <= radii[m]) {
                    covered[q] = 1;
                    break;
                }
            }
        }
    });
    const auto hits = std::count(covered.begin(), covered.end(), std::uint8_t{1});
    return static_cast<double>(hits) / static_cast<double>(queries.count);
}

}  // namespace

std::vector<double> knn_radii(const FeatureSet& f, std::size_t k) {
    check_k(f, k, "neighbourhood");
    std::vector<double> radii(f.count);
    parallel_chunks(f.count, default_thread_count(), [&](std::size_t begin, std::size_t end, std::size_t) {
        std::vector<double> d;
        d.reserve(f.count - 1);
        for (std::size_t i = begin; i < end; ++i) {
            d.clear();
            for (std::size_t j = 0; j < f.count; ++j) {
                if (j != i) d.push_back(distance(f.row(i), f.row(j)));
            }
            std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
            radii[i] = d[k - 1];
        }
    });
    return radii;
}

PrecisionRecall precision_recall(const FeatureSet& real, const FeatureSet& fake, std::size_t k) {
    if (real.dim != fake.dim) throw ShapeError("precision/recall feature dimensions differ");
    check_k(real, k, "real");
    check_k(fake, k, "fake");
    const auto real_radii = knn_radii(real, k);
    const auto fake_radii = knn_radii(fake, k);
    return {coverage(real, real_radii, fake), coverage(fake, fake_radii, real)};
}

RealismResult realism_score(const FeatureSet& real, const FeatureSet& fake, std::size_t k) {
    if (real.dim != fake.dim) throw ShapeError("realism feature dimensions differ");
    check_k(real, k, "real");
    if (fake.count == 0) throw ContractError("realism needs at least one fake sample");
    const auto radii = knn_radii(real, k);

    RealismResult r;
    r.scores.assign(fake.count, 0.0);
    parallel_chunks(fake.count, default_thread_count(), [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t g = begin; g < end; ++g) {
            double best = 0.0;
            for (std::size_t j = 0; j < real.count; ++j) {
                const double d = std::max(distance(fake.row(g), real.row(j)), kRealismDistanceFloor);
                best = std::max(best, radii[j] / d);
            }
            r.scores[g] = std::min(best, kRealismCap);
        }
    });
    double sum = 0.0;
    for (double s : r.scores) {
        sum += s;
        r.capped += s >= kRealismCap ? 1 : 0;
    }
    r.mean = sum / static_cast<double>(r.scores.size());
    double var = 0.0;
    for (double s : r.scores) var += (s - r.mean) * (s - r.mean);
    r.stddev = std::sqrt(var / static_cast<double>(r.scores.size()));
    return r;
}

std::string format_mean_std(double mean, double stddev) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.4f±%.4f", mean, stddev);
    return buf;
}

FeatureSet pixel_features(std::span<const Tensor3> images, std::size_t side) {
    if (images.empty()) throw ContractError("pixel_features needs at least one image");
    if (side < 2) throw ContractError("feature grid side must be >= 2");
    FeatureSet f;
    f.count = images.size();
    f.dim = side * side;
    f.source = "pixel" + std::to_string(side);
    f.data.reserve(f.count * f.dim);
    for (const Tensor3& img : images) {
        if (img.channels() != 3) throw ShapeError("pixel_features expects 3-channel images");
        const std::size_t h = img.height(), w = img.width();
        if (side > h || side > w) throw ShapeError("feature grid is larger than the image");
        for (std::size_t by = 0; by < side; ++by) {
            const std::size_t y0 = by * h / side, y1 = (by + 1) * h / side;
            for (std::size_t bx = 0; bx < side; ++bx) {
                const std::size_t x0 = bx * w / side, x1 = (bx + 1) * w / side;
                double sum = 0.0;
                for (std::size_t y = y0; y < y1; ++y) {
                    for (std::size_t x = x0; x < x1; ++x) {
                        sum += 0.299 * img.at(0, y, x) + 0.587 * img.at(1, y, x) + 0.114 * img.at(2, y, x);
                    }
                }
                f.data.push_back(static_cast<float>(sum / static_cast<double>((y1 - y0) * (x1 - x0))));
            }
        }
    }
    return f;
}

nlohmann::json MetricReport::to_json() const {
    nlohmann::json j;
    j["k"] = k;
    if (fid) j["fid"] = *fid;
    if (pr) {
        j["precision"] = pr->precision;
        j["recall"] = pr->recall;
    }
    if (realism) {
        j["realism"] = {
            {"mean", realism->mean},
            {"std", realism->stddev},
            {"summary", format_mean_std(realism->mean, realism->stddev)},
            {"capped", realism->capped},
            {"scores", realism->scores},
        };
    }
    return j;
}

Bytes write_fts(const FeatureSet& f) {
    f.validate();
    ByteWriter w;
    w.magic("FTS1");
    w.json_header({{"count", f.count}, {"dim", f.dim}, {"source", f.source}});
    w.f32s(f.data);
    return std::move(w).take();
}

FeatureSet read_fts(std::span<const std::uint8_t> bytes, const std::string& context) {
    ByteReader r(bytes, context);
    r.expect_magic("FTS1");
    const auto header = r.json_header();
    FeatureSet f;
    try {
        f.count = header.at("count").get<std::size_t>();
        f.dim = header.at("dim").get<std::size_t>();
        f.source = header.value("source", std::string());
    } catch (const nlohmann::json::exception& e) {
        r.fail(std::string("malformed header: ") + e.what());
    }
    if (f.dim == 0) r.fail("feature dim must be >= 1");
    f.data = r.f32s(f.count * f.dim, "feature payload");
    r.expect_end();
    return f;
}

}  // namespace neuroprobe
