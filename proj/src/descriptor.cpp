#include "vehcov/descriptor.hpp"

#include <cmath>

#include "vehcov/preprocess.hpp"

namespace vehcov {

int feature_dimension(FeatureSet fs) {
    switch (fs) {
        case FeatureSet::XyGradLap: return 5;
        case FeatureSet::R2GradLap: return 4;
        case FeatureSet::XyLapEdge: return 4;
        case FeatureSet::CodeDefault: return 5;
    }
    throw Error("unknown feature set");
}

std::string to_string(FeatureSet fs) {
    switch (fs) {
        case FeatureSet::XyGradLap: return "xy_grad_lap";
        case FeatureSet::R2GradLap: return "r2_grad_lap";
        case FeatureSet::XyLapEdge: return "xy_lap_edge";
        case FeatureSet::CodeDefault: return "code_default";
    }
    throw Error("unknown feature set");
}

FeatureSet parse_feature_set(const std::string& name) {
    for (auto fs : {FeatureSet::XyGradLap, FeatureSet::R2GradLap, FeatureSet::XyLapEdge, FeatureSet::CodeDefault})
        if (to_string(fs) == name) return fs;
    throw Error("unknown feature set '" + name + "'");
}

std::string to_string(Normalization n) { return n == Normalization::Population ? "population" : "sample"; }

Normalization parse_normalization(const std::string& name) {
    if (name == "population") return Normalization::Population;
    if (name == "sample") return Normalization::Sample;
    throw Error("unknown covariance normalization '" + name + "'");
}

GrayImage correlate3x3(const GrayImage& img, const double (&kernel)[3][3]) {
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int j = 0; j < 3; ++j)
                for (int i = 0; i < 3; ++i)
                    if (kernel[j][i] != 0.0) acc += kernel[j][i] * img.clamped(x + i - 1, y + j - 1);
            out.at(x, y) = acc;
        }
    return out;
}

FeatureTensor feature_tensor(const GrayImage& region_gray, FeatureSet fs) {
    const int w = region_gray.width, h = region_gray.height;
    if (w < 3 || h < 3)
        throw Error("feature region must be at least 3x3, got " + std::to_string(w) + "x" + std::to_string(h));

    FeatureTensor ft{w, h, fs, {}};
    auto coord_plane = [&](bool use_x) {
        GrayImage p(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) p.at(x, y) = use_x ? x + 1.0 : y + 1.0;
        return p;
    };
    auto r2_plane = [&] {
        GrayImage p(w, h);
        const double cx = (w + 1) / 2.0, cy = (h + 1) / 2.0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double dx = x + 1.0 - cx, dy = y + 1.0 - cy;
                p.at(x, y) = dx * dx + dy * dy;
            }
        return p;
    };
    auto edge_plane = [&] {
        BinaryImage e = canny_edges(region_gray, 0.2);
        GrayImage p(w, h);
        for (size_t i = 0; i < e.size(); ++i) p.pixels[i] = e.pixels[i];
        return p;
    };

    auto& planes = ft.planes;
    switch (fs) {
        case FeatureSet::XyGradLap:
            planes = {coord_plane(true), coord_plane(false), correlate3x3(region_gray, kSobelX),
                      correlate3x3(region_gray, kSobelY), correlate3x3(region_gray, kLaplacian8)};
            break;
        case FeatureSet::R2GradLap:
            planes = {r2_plane(), correlate3x3(region_gray, kSobelX), correlate3x3(region_gray, kSobelY),
                      correlate3x3(region_gray, kLaplacian8)};
            break;
        case FeatureSet::XyLapEdge:
            planes = {coord_plane(true), coord_plane(false), correlate3x3(region_gray, kLaplacian8), edge_plane()};
            break;
        case FeatureSet::CodeDefault:
            planes = {coord_plane(true), coord_plane(false), region_gray, correlate3x3(region_gray, kLaplacian8),
                      edge_plane()};
            break;
    }
    return ft;
}

CovarianceDescriptor covariance(const FeatureTensor& ft, Normalization norm) {
    const long n = static_cast<long>(ft.width) * ft.height;
    if (n < 2) throw Error("covariance needs at least 2 pixels");
    const int d = ft.dimension();
    for (const auto& p : ft.planes)
        if (p.width != ft.width || p.height != ft.height) throw Error("feature plane size mismatch");

    // Single-pass co-moment accumulation.
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d), delta(d), x(d);
    Eigen::MatrixXd comoment = Eigen::MatrixXd::Zero(d, d);
    for (long i = 0; i < n; ++i) {
        for (int u = 0; u < d; ++u) x[u] = ft.planes[u].pixels[static_cast<size_t>(i)];
        delta = x - mean;
        mean += delta / static_cast<double>(i + 1);
        comoment.noalias() += delta * (x - mean).transpose();
    }
    const double denom = norm == Normalization::Population ? static_cast<double>(n) : static_cast<double>(n - 1);
    CovarianceDescriptor out;
    out.matrix = (comoment + comoment.transpose()) / (2.0 * denom);
    out.feature_set = ft.feature_set;
    out.normalization = norm;
    out.n_pixels = n;
    return out;
}

Eigen::MatrixXd regularize(const Eigen::MatrixXd& c, double eps) {
    const auto d = c.rows();
    double scale = c.trace() / static_cast<double>(d);
    if (!(scale > 0.0)) scale = 1.0;
    return c + (eps * scale) * Eigen::MatrixXd::Identity(d, d);
}

Eigen::VectorXd generalized_eigenvalues(const Eigen::MatrixXd& c1, const Eigen::MatrixXd& c2, double eps) {
    if (c1.rows() != c1.cols() || c2.rows() != c2.cols() || c1.rows() != c2.rows() || c1.rows() == 0)
        throw Error("generalized eigenvalues need two square matrices of equal size");
    if (!c1.allFinite() || !c2.allFinite()) throw Error("generalized eigenvalues: non-finite input");

    const Eigen::MatrixXd a = regularize(0.5 * (c1 + c1.transpose()), eps);
    const Eigen::MatrixXd b = regularize(0.5 * (c2 + c2.transpose()), eps);
    Eigen::LLT<Eigen::MatrixXd> llt(b);
    if (llt.info() != Eigen::Success) throw Error("second matrix is not positive definite after regularization");

    // L^-1 A L^-T
    const auto lower = llt.matrixL();
    Eigen::MatrixXd y = lower.solve(a);
    Eigen::MatrixXd z = lower.solve(y.transpose());
    z = 0.5 * (z + z.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(z, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw Error("symmetric eigensolver did not converge");
    Eigen::VectorXd lambda = eig.eigenvalues();
    if (lambda.minCoeff() <= 0.0) throw Error("first matrix is not positive definite after regularization");
    return lambda;
}

double spd_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double eps) {
    Eigen::VectorXd lambda = generalized_eigenvalues(a, b, eps);
    double acc = 0.0;
    for (double l : lambda) {
        double lg = std::log(l);
        acc += lg * lg;
    }
    return std::sqrt(acc);
}

double spd_distance(const CovarianceDescriptor& a, const CovarianceDescriptor& b, double eps) {
    if (a.feature_set != b.feature_set)
        throw Error("descriptor feature sets differ: " + to_string(a.feature_set) + " vs " + to_string(b.feature_set));
    if (a.normalization != b.normalization) throw Error("descriptor covariance normalizations differ");
    if (a.matrix.rows() != b.matrix.rows()) throw Error("descriptor dimensions differ");
    return spd_distance(a.matrix, b.matrix, eps);
}

CovarianceDescriptor describe(const GrayImage& region_gray, FeatureSet fs, Normalization norm) {
    return covariance(feature_tensor(region_gray, fs), norm);
}

}  // namespace vehcov
