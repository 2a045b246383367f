#include "doctest.h"
#include "support.hpp"
#include "vehcov/descriptor.hpp"

using namespace vehcov;

namespace {

bool interior_all(const GrayImage& g, double v) {
    for (int y = 1; y < g.height - 1; ++y)
        for (int x = 1; x < g.width - 1; ++x)
            if (g.at(x, y) != v) return false;
    return true;
}

std::vector<std::vector<double>> samples_of(const FeatureTensor& ft) {
    std::vector<std::vector<double>> s(static_cast<size_t>(ft.width) * ft.height);
    for (size_t i = 0; i < s.size(); ++i)
        for (const auto& p : ft.planes) s[i].push_back(p.pixels[i]);
    return s;
}

}  // namespace

TEST_CASE("feature set names and dimensions") {
    CHECK(feature_dimension(FeatureSet::XyGradLap) == 5);
    CHECK(feature_dimension(FeatureSet::R2GradLap) == 4);
    CHECK(feature_dimension(FeatureSet::XyLapEdge) == 4);
    CHECK(feature_dimension(FeatureSet::CodeDefault) == 5);
    for (auto fs : {FeatureSet::XyGradLap, FeatureSet::R2GradLap, FeatureSet::XyLapEdge, FeatureSet::CodeDefault})
        CHECK(parse_feature_set(to_string(fs)) == fs);
    CHECK_THROWS_AS(parse_feature_set("eq9"), Error);
    CHECK(parse_normalization("sample") == Normalization::Sample);
}

TEST_CASE("constant region has flat derivative planes") {
    FeatureTensor ft = feature_tensor(GrayImage(8, 6, 50.0), FeatureSet::XyGradLap);
    REQUIRE(ft.dimension() == 5);
    for (int k = 2; k < 5; ++k)
        for (double v : ft.planes[k].pixels) CHECK(v == 0.0);
    CHECK(ft.planes[0].at(0, 0) == 1.0);
    CHECK(ft.planes[0].at(7, 0) == 8.0);
    CHECK(ft.planes[1].at(0, 5) == 6.0);
}

TEST_CASE("ramps through the Sobel kernels") {
    GrayImage ramp(10, 7);
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 10; ++x) ramp.at(x, y) = x;
    FeatureTensor ft = feature_tensor(ramp, FeatureSet::XyGradLap);
    CHECK(interior_all(ft.planes[2], 8.0));
    CHECK(interior_all(ft.planes[3], 0.0));
    CHECK(interior_all(ft.planes[4], 0.0));

    // The y kernel has +1 on the row above, so a downward ramp reads -8.
    GrayImage vramp(10, 7);
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 10; ++x) vramp.at(x, y) = y;
    FeatureTensor fv = feature_tensor(vramp, FeatureSet::XyGradLap);
    CHECK(interior_all(fv.planes[3], -8.0));
}

TEST_CASE("gradient planes are scaled central differences on a quadratic") {
    GrayImage q(12, 9);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 12; ++x) q.at(x, y) = 0.5 * x * x + 3.0 * y * y + x * y;
    FeatureTensor ft = feature_tensor(q, FeatureSet::XyGradLap);
    for (int y = 1; y < 8; ++y)
        for (int x = 1; x < 11; ++x) {
            double cx = (q.at(x + 1, y) - q.at(x - 1, y)) / 2.0;
            double cy = (q.at(x, y + 1) - q.at(x, y - 1)) / 2.0;
            CHECK(ft.planes[2].at(x, y) == doctest::Approx(8.0 * cx));
            CHECK(ft.planes[3].at(x, y) == doctest::Approx(-8.0 * cy));
        }
}

TEST_CASE("r squared is measured from the region center") {
    FeatureTensor ft = feature_tensor(GrayImage(5, 5, 1.0), FeatureSet::R2GradLap);
    REQUIRE(ft.dimension() == 4);
    CHECK(ft.planes[0].at(2, 2) == 0.0);
    CHECK(ft.planes[0].at(0, 0) == 8.0);
    CHECK(ft.planes[0].at(4, 4) == 8.0);
    CHECK(ft.planes[0].at(4, 2) == 4.0);
}

TEST_CASE("edge and intensity channels") {
    GrayImage step(16, 12);
    for (int y = 0; y < 12; ++y)
        for (int x = 8; x < 16; ++x) step.at(x, y) = 100;
    FeatureTensor ft = feature_tensor(step, FeatureSet::CodeDefault);
    REQUIRE(ft.dimension() == 5);
    CHECK(ft.planes[2] == step);
    double edges = 0;
    for (double v : ft.planes[4].pixels) edges += v;
    CHECK(edges > 0);
    FeatureTensor le = feature_tensor(step, FeatureSet::XyLapEdge);
    CHECK(le.planes[3] == ft.planes[4]);
    CHECK_THROWS_AS(feature_tensor(GrayImage(2, 5), FeatureSet::CodeDefault), Error);
}

TEST_CASE("covariance hand cases") {
    FeatureTensor same{4, 3, FeatureSet::CodeDefault, std::vector<GrayImage>(5, GrayImage(4, 3, 7.0))};
    CHECK(covariance(same).matrix.isZero(0.0));

    FeatureTensor two{2, 1, FeatureSet::CodeDefault, {GrayImage(2, 1)}};
    two.planes[0].pixels = {0.0, 2.0};
    auto c = covariance(two);
    REQUIRE(c.matrix.rows() == 1);
    CHECK(c.matrix(0, 0) == 1.0);
    CHECK(covariance(two, Normalization::Sample).matrix(0, 0) == 2.0);

    FeatureTensor lonely{1, 1, FeatureSet::CodeDefault, {GrayImage(1, 1)}};
    CHECK_THROWS_AS(covariance(lonely), Error);
}

TEST_CASE("covariance equals the two-pass oracle") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> n(0, 50);
    for (int t = 0; t < 100; ++t) {
        FeatureTensor ft{12, 9, FeatureSet::CodeDefault, {}};
        for (int k = 0; k < 5; ++k) {
            GrayImage p(12, 9);
            for (auto& v : p.pixels) v = n(rng) + 100 * k;
            ft.planes.push_back(p);
        }
        for (auto norm : {Normalization::Population, Normalization::Sample}) {
            auto got = covariance(ft, norm).matrix;
            auto want = testing::two_pass_covariance(samples_of(ft), norm == Normalization::Sample);
            CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-10);
            CHECK((got - got.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("descriptors of real regions are positive semidefinite") {
    std::mt19937_64 rng(32);
    for (int t = 0; t < 30; ++t) {
        GrayImage g = testing::random_gray(rng, 20, 12);
        for (auto fs : {FeatureSet::XyGradLap, FeatureSet::R2GradLap, FeatureSet::XyLapEdge, FeatureSet::CodeDefault}) {
            auto d = describe(g, fs);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d.matrix);
            CHECK(es.eigenvalues().minCoeff() >= -1e-9 * d.matrix.trace());
            CHECK(d.n_pixels == 240);
        }
    }
}

TEST_CASE("generalized eigenvalues") {
    auto ones = generalized_eigenvalues(Eigen::MatrixXd::Identity(5, 5), Eigen::MatrixXd::Identity(5, 5));
    for (int i = 0; i < 5; ++i) CHECK(ones(i) == doctest::Approx(1.0).epsilon(1e-12));

    Eigen::MatrixXd d = Eigen::Vector2d(1.0, 4.0).asDiagonal();
    auto lam = generalized_eigenvalues(d, Eigen::MatrixXd::Identity(2, 2), 0.0);
    CHECK(lam(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(lam(1) == doctest::Approx(4.0).epsilon(1e-14));
    lam = generalized_eigenvalues(d, Eigen::MatrixXd::Identity(2, 2));
    CHECK(lam(0) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(lam(1) == doctest::Approx(4.0).epsilon(1e-7));

    Eigen::MatrixXd bad = Eigen::Vector2d(1.0, -4.0).asDiagonal();
    CHECK_THROWS_AS(generalized_eigenvalues(Eigen::MatrixXd::Identity(2, 2), bad, 0.0), Error);
}

TEST_CASE("generalized eigenvalues match the determinant sign sweep") {
    std::mt19937_64 rng(33);
    for (int t = 0; t < 100; ++t) {
        Eigen::MatrixXd a = testing::random_spd(rng, 5), b = testing::random_spd(rng, 5);
        auto got = generalized_eigenvalues(a, b, 0.0);
        auto want = testing::sign_sweep_eigenvalues(a, b);
        REQUIRE(want.size() == 5);
        for (int i = 0; i < 5; ++i) CHECK(std::abs(got(i) - want[i]) <= 1e-8 * want[i]);
    }
}

TEST_CASE("regularization leaves zero-trace matrices positive") {
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(3, 3);
    Eigen::MatrixXd r = regularize(z, 1e-8);
    CHECK(r.isApprox(1e-8 * Eigen::MatrixXd::Identity(3, 3)));
    CHECK(spd_distance(z, z) == 0.0);
}

TEST_CASE("distance hand cases") {
    const Eigen::MatrixXd i5 = Eigen::MatrixXd::Identity(5, 5);
    CHECK(std::abs(spd_distance(i5, std::exp(2.0) * i5) - 2.0 * std::sqrt(5.0)) <= 1e-9);
    std::mt19937_64 rng(34);
    for (int t = 0; t < 50; ++t) {
        Eigen::MatrixXd a = testing::random_spd(rng, 5), b = testing::random_spd(rng, 5);
        CHECK(spd_distance(a, a) <= 1e-9);
        CHECK(std::abs(spd_distance(a, b) - spd_distance(b, a)) <= 1e-9);
    }
}

TEST_CASE("metric axioms and congruence invariance") {
    std::mt19937_64 rng(35);
    for (int d : {4, 5}) {
        for (int t = 0; t < 200; ++t) {
            Eigen::MatrixXd a = testing::random_spd(rng, d), b = testing::random_spd(rng, d),
                            c = testing::random_spd(rng, d);
            double ab = spd_distance(a, b), bc = spd_distance(b, c), ac = spd_distance(a, c);
            CHECK(ab >= 0.0);
            CHECK(ab > 1e-8);
            CHECK(ac <= ab + bc + 1e-9);
            Eigen::MatrixXd m = testing::random_invertible(rng, d);
            double moved = spd_distance(m.transpose() * a * m, m.transpose() * b * m, 0.0);
            CHECK(std::abs(moved - spd_distance(a, b, 0.0)) <= 1e-6 * spd_distance(a, b, 0.0));
        }
    }
}

TEST_CASE("descriptor distance checks compatibility") {
    GrayImage g(6, 6);
    for (int i = 0; i < 36; ++i) g.pixels[i] = (i * 37) % 11;
    auto a = describe(g, FeatureSet::CodeDefault);
    auto b = describe(g, FeatureSet::XyGradLap);
    auto c = describe(g, FeatureSet::CodeDefault, Normalization::Sample);
    CHECK(spd_distance(a, a) <= 1e-9);
    CHECK_THROWS_AS(spd_distance(a, b), Error);
    CHECK_THROWS_AS(spd_distance(a, c), Error);
}
