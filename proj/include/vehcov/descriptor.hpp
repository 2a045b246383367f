#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vehcov/image.hpp"

namespace vehcov {

/// Per-pixel feature layouts.
///   XyGradLap   : x, y, dI/dx, dI/dy, Laplacian
///   R2GradLap   : r^2, dI/dx, dI/dy, Laplacian
///   XyLapEdge   : x, y, Laplacian, Canny edge
///   CodeDefault : x, y, I, Laplacian, Canny edge
enum class FeatureSet { XyGradLap, R2GradLap, XyLapEdge, CodeDefault };

int feature_dimension(FeatureSet fs);
std::string to_string(FeatureSet fs);
FeatureSet parse_feature_set(const std::string& name);

/// d planes of per-pixel features over a region.
struct FeatureTensor {
    int width = 0;
    int height = 0;
    FeatureSet feature_set = FeatureSet::CodeDefault;
    std::vector<GrayImage> planes;

    int dimension() const { return static_cast<int>(planes.size()); }
};

enum class Normalization { Population, Sample };

std::string to_string(Normalization n);
Normalization parse_normalization(const std::string& name);

struct CovarianceDescriptor {
    Eigen::MatrixXd matrix;
    FeatureSet feature_set = FeatureSet::CodeDefault;
    Normalization normalization = Normalization::Population;
    long n_pixels = 0;
};

/// 3x3 derivative kernels, applied as correlation (row index = y offset).
inline constexpr double kSobelX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
inline constexpr double kSobelY[3][3] = {{1, 2, 1}, {0, 0, 0}, {-1, -2, -1}};
inline constexpr double kLaplacian8[3][3] = {{-1, -1, -1}, {-1, 8, -1}, {-1, -1, -1}};

/// 3x3 correlation with replicate padding.
GrayImage correlate3x3(const GrayImage& img, const double (&kernel)[3][3]);

/// Builds the feature planes of `region_gray`. Coordinates are 1-based and
/// region-local; r^2 is measured from ((W+1)/2, (H+1)/2).
FeatureTensor feature_tensor(const GrayImage& region_gray, FeatureSet fs);

/// Covariance of the per-pixel feature vectors (1/N, or 1/(N-1) for Sample).
CovarianceDescriptor covariance(const FeatureTensor& ft, Normalization norm = Normalization::Population);

inline constexpr double kDefaultEps = 1e-8;

/// Adds eps * (trace/d) * I (eps * I for a zero-trace matrix).
Eigen::MatrixXd regularize(const Eigen::MatrixXd& c, double eps);

/// Ascending generalized eigenvalues of the regularized pair (C1, C2), via a
/// Cholesky factor of C2 and a symmetric eigensolve. Throws if a regularized
/// input is not positive definite.
Eigen::VectorXd generalized_eigenvalues(const Eigen::MatrixXd& c1, const Eigen::MatrixXd& c2,
                                        double eps = kDefaultEps);

/// sqrt(sum ln^2 lambda_i) over the generalized eigenvalues.
double spd_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double eps = kDefaultEps);

/// As above; refuses descriptors built with different feature sets or normalizations.
double spd_distance(const CovarianceDescriptor& a, const CovarianceDescriptor& b, double eps = kDefaultEps);

/// feature_tensor followed by covariance.
CovarianceDescriptor describe(const GrayImage& region_gray, FeatureSet fs,
                              Normalization norm = Normalization::Population);

}  // namespace vehcov
