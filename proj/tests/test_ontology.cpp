#include <fstream>

#include "doctest.h"
#include "support.hpp"
#include "vehcov/ontology.hpp"

using namespace vehcov;

namespace {

CovarianceDescriptor desc(const Eigen::MatrixXd& m, FeatureSet fs = FeatureSet::CodeDefault) {
    return {m, fs, Normalization::Population, 100};
}

Eigen::MatrixXd scaled_identity(double s, int d = 5) { return s * Eigen::MatrixXd::Identity(d, d); }

}  // namespace

TEST_CASE("labels") {
    for (auto l : {ClassLabel::Car, ClassLabel::Truck, ClassLabel::Multiple, ClassLabel::Junk})
        CHECK(parse_label(to_string(l)) == l);
    CHECK(parse_label("truck") == ClassLabel::Truck);
    CHECK_FALSE(try_parse_label("bus").has_value());
    CHECK_THROWS_AS(parse_label("bus"), Error);
}

TEST_CASE("adding entries") {
    OntologyLibrary lib;
    CHECK(lib.add_entry(ClassLabel::Car, desc(scaled_identity(1))) == 0);
    CHECK(lib.size() == 1);
    CHECK_THROWS_AS(lib.add_entry(ClassLabel::Car, desc(scaled_identity(1, 5), FeatureSet::XyGradLap)), Error);
    CHECK_THROWS_AS(lib.add_entry(ClassLabel::Car, desc(scaled_identity(1, 4))), Error);
    CovarianceDescriptor sample = desc(scaled_identity(1));
    sample.normalization = Normalization::Sample;
    CHECK_THROWS_AS(lib.add_entry(ClassLabel::Car, sample), Error);

    OntologyLibrary four;
    int id = 0;
    for (auto l : {ClassLabel::Car, ClassLabel::Truck, ClassLabel::Multiple, ClassLabel::Junk})
        CHECK(four.add_entry(l, desc(scaled_identity(1 + id))) == id++);
    CHECK(four.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(four.entries()[i].id == i);
}

TEST_CASE("nearest neighbor classification") {
    OntologyLibrary single;
    single.add_entry(ClassLabel::Car, desc(scaled_identity(2)));
    auto r = single.classify(desc(scaled_identity(3)));
    CHECK(r.label == ClassLabel::Car);
    CHECK(std::isinf(r.margin));
    CHECK(std::isinf(r.runner_up_distance));

    OntologyLibrary lib;
    lib.add_entry(ClassLabel::Car, desc(scaled_identity(1)));
    lib.add_entry(ClassLabel::Truck, desc(scaled_identity(50)));
    lib.add_entry(ClassLabel::Junk, desc(scaled_identity(0.01)));
    r = lib.classify(desc(scaled_identity(50)));
    CHECK(r.label == ClassLabel::Truck);
    CHECK(r.nearest_id == 1);
    CHECK(r.distance <= 1e-9);
    CHECK(r.margin > 0);
    CHECK_THROWS_AS(OntologyLibrary().classify(desc(scaled_identity(1))), Error);
}

TEST_CASE("equidistant query goes to the lower id with zero margin") {
    OntologyLibrary lib;
    lib.add_entry(ClassLabel::Truck, desc(scaled_identity(std::exp(1.0))));
    lib.add_entry(ClassLabel::Car, desc(scaled_identity(std::exp(-1.0))));
    auto r = lib.classify(desc(scaled_identity(1.0)));
    CHECK(r.nearest_id == 0);
    CHECK(r.label == ClassLabel::Truck);
    CHECK(r.margin == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("order, supersets and ties") {
    std::mt19937_64 rng(41);
    std::vector<std::pair<ClassLabel, Eigen::MatrixXd>> items;
    const ClassLabel labels[] = {ClassLabel::Car, ClassLabel::Truck, ClassLabel::Multiple, ClassLabel::Junk};
    for (int i = 0; i < 12; ++i) items.push_back({labels[i % 4], testing::random_spd(rng, 5)});
    std::vector<Eigen::MatrixXd> queries;
    for (int i = 0; i < 20; ++i) queries.push_back(testing::random_spd(rng, 5));

    OntologyLibrary fwd, rev, half;
    for (const auto& [l, m] : items) fwd.add_entry(l, desc(m));
    for (auto it = items.rbegin(); it != items.rend(); ++it) rev.add_entry(it->first, desc(it->second));
    for (size_t i = 0; i < items.size() / 2; ++i) half.add_entry(items[i].first, desc(items[i].second));
    for (const auto& q : queries) {
        auto a = fwd.classify(desc(q)), b = rev.classify(desc(q)), h = half.classify(desc(q));
        CHECK(a.label == b.label);
        CHECK(a.distance == doctest::Approx(b.distance).epsilon(1e-12));
        CHECK(a.distance <= h.distance + 1e-12);
    }

    // Exact duplicates with different labels: the earlier entry wins.
    OntologyLibrary dup;
    dup.add_entry(ClassLabel::Junk, desc(items[0].second));
    dup.add_entry(ClassLabel::Car, desc(items[0].second));
    CHECK(dup.classify(desc(queries[0])).label == ClassLabel::Junk);
}

TEST_CASE("save and load round trip exactly") {
    testing::TempDir dir("onto");
    std::mt19937_64 rng(42);
    OntologyLibrary lib(FeatureSet::XyGradLap, Normalization::Sample);
    const ClassLabel labels[] = {ClassLabel::Car, ClassLabel::Truck, ClassLabel::Multiple, ClassLabel::Junk};
    for (int i = 0; i < 10; ++i) {
        CovarianceDescriptor d{testing::random_spd(rng, 5) * 1e3 / 7.0, FeatureSet::XyGradLap, Normalization::Sample, 40 + i};
        lib.add_entry(labels[i % 4], d, Provenance{i, Rect{i, 2 * i, 30, 15}, "train.csv"}, i == 3 ? "odd \"one\"" : "");
    }
    lib.save(dir / "lib.json");
    OntologyLibrary back = OntologyLibrary::load(dir / "lib.json");
    REQUIRE(back.size() == 10);
    CHECK(back.feature_set() == FeatureSet::XyGradLap);
    CHECK(back.normalization() == Normalization::Sample);
    for (size_t i = 0; i < 10; ++i) {
        const auto& a = lib.entries()[i];
        const auto& b = back.entries()[i];
        CHECK(a.id == b.id);
        CHECK(a.label == b.label);
        CHECK(a.descriptor.matrix == b.descriptor.matrix);
        CHECK(a.descriptor.n_pixels == b.descriptor.n_pixels);
        CHECK(a.provenance.bbox == b.provenance.bbox);
        CHECK(a.provenance.source == b.provenance.source);
        CHECK(a.note == b.note);
    }
    for (int i = 0; i < 10; ++i) {
        CovarianceDescriptor q{testing::random_spd(rng, 5), FeatureSet::XyGradLap, Normalization::Sample, 9};
        auto x = lib.classify(q), y = back.classify(q);
        CHECK(x.nearest_id == y.nearest_id);
        CHECK(x.distance == y.distance);
        CHECK(x.margin == y.margin);
    }
    // New ids continue after the loaded ones.
    CHECK(back.add_entry(ClassLabel::Car, lib.entries()[0].descriptor) == 10);
}

TEST_CASE("corrupt and mismatched files are refused") {
    testing::TempDir dir("onto_bad");
    OntologyLibrary lib;
    lib.add_entry(ClassLabel::Car, desc(scaled_identity(1)));
    std::string text = lib.to_json();
    CHECK_THROWS_WITH_AS(OntologyLibrary::from_json(text.substr(0, text.size() / 2)),
                         doctest::Contains("parse error at byte"), Error);
    std::string v2 = text;
    v2.replace(v2.find("\"version\": 1"), 12, "\"version\": 2");
    CHECK_THROWS_WITH_AS(OntologyLibrary::from_json(v2), doctest::Contains("version"), Error);
    CHECK_THROWS_AS(OntologyLibrary::from_json("{\"version\": 1}"), Error);
    CHECK_THROWS_AS(lib.require_compatible(FeatureSet::XyGradLap, Normalization::Population), Error);
    CHECK_NOTHROW(lib.require_compatible(FeatureSet::CodeDefault, Normalization::Population));
    CHECK_THROWS_AS(OntologyLibrary::load(dir / "missing.json"), Error);
}
