#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>

#include "microharvest/shapemodel.hpp"

using namespace mh;

namespace {

GridU8 disk_mask(int radius, int pad = 2) {
    const int side = 2 * (radius + pad) + 1;
    GridU8 m(side, side, 0);
    const double c = side / 2.0;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            if (std::hypot(x + 0.5 - c, y + 0.5 - c) <= radius) m.at(x, y) = 1;
    return m;
}

GridU8 translate(const GridU8& m, int dx, int dy, int w, int h) {
    GridU8 out(w, h, 0);
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.at(x, y)) out.at(x + dx, y + dy) = 1;
    return out;
}

GridU8 rotate90(const GridU8& m) {
    GridU8 out(m.height(), m.width(), 0);
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.at(x, y)) out.at(m.height() - 1 - y, x) = 1;
    return out;
}

}  // namespace

TEST_CASE("single pixel descriptors") {
    GridU8 m(1, 1, 1);
    const ShapeVector s = extract_shape_descriptors(m);
    CHECK(s.area == 1.0);
    CHECK(s.solidity == doctest::Approx(1.0));
    CHECK(s.n_branches == 0.0);
    CHECK(s.major_axis > 0.0);
    CHECK(s.minor_axis > 0.0);
}

TEST_CASE("rasterized disk matches analytic values") {
    const ShapeVector s = extract_shape_descriptors(disk_mask(10));
    CHECK(std::abs(s.area - 100.0 * M_PI) / (100.0 * M_PI) < 0.03);
    CHECK(std::abs(s.major_axis / s.minor_axis - 1.0) < 0.02);
    CHECK(s.solidity >= 0.98);
    CHECK(s.thickness == doctest::Approx(20.0).epsilon(0.15));
}

TEST_CASE("thin line descriptors") {
    GridU8 m(30, 1, 1);
    const ShapeVector s = extract_shape_descriptors(m);
    CHECK(std::abs(s.fiber_length - 29.0) <= 2.0);
    CHECK(s.thickness == doctest::Approx(1.0).epsilon(0.2));
    CHECK(s.n_branches <= 1.0);
    CHECK(s.solidity == doctest::Approx(1.0));
}

TEST_CASE("extractor rejects empty and disconnected masks") {
    GridU8 empty(5, 5, 0);
    CHECK_THROWS_WITH(extract_shape_descriptors(empty), "empty mask");
    GridU8 two(7, 3, 0);
    two.at(0, 0) = 1;
    two.at(6, 2) = 1;
    CHECK_THROWS_WITH(extract_shape_descriptors(two), "not a single component");
}

TEST_CASE("descriptors are translation invariant and rotation equivariant") {
    const GridU8 base = disk_mask(6);
    GridU8 bar(22, 8, 0);
    for (int y = 2; y <= 5; ++y)
        for (int x = 2; x <= 19; ++x) bar.at(x, y) = 1;

    for (const GridU8& m : {base, bar}) {
        const ShapeVector a = extract_shape_descriptors(m);
        const ShapeVector b =
            extract_shape_descriptors(translate(m, 5, 9, m.width() + 20, m.height() + 20));
        CHECK(a.area == b.area);
        CHECK(a.major_axis == doctest::Approx(b.major_axis));
        CHECK(a.solidity == doctest::Approx(b.solidity));
        CHECK(a.n_branches == b.n_branches);

        const ShapeVector r = extract_shape_descriptors(rotate90(m));
        CHECK(r.area == a.area);
        CHECK(std::abs(r.major_axis - a.major_axis) / a.major_axis < 0.03);
        CHECK(std::abs(r.minor_axis - a.minor_axis) / a.minor_axis < 0.03);
    }
}

TEST_CASE("fit_mvn on identical vectors gives zero covariance") {
    Eigen::VectorXd v(3);
    v << 1.0, -2.0, 0.5;
    const Mvn m = fit_mvn(std::vector<Eigen::VectorXd>(10, v));
    CHECK((m.mean - v).norm() < 1e-12);
    CHECK(m.cov.norm() < 1e-12);
    Rng rng(1);
    CHECK((m.sample(rng) - v).norm() < 1e-12);
}

TEST_CASE("fit_mvn recovers a known 2-D normal from seeded draws") {
    Mvn truth;
    truth.mean = Eigen::Vector2d(3.0, -1.0);
    truth.cov = Eigen::Matrix2d();
    truth.cov << 4.0, 1.2, 1.2, 2.0;
    truth.finalize();
    Rng rng(99);
    std::vector<Eigen::VectorXd> samples;
    const int n = 100000;
    for (int i = 0; i < n; ++i) samples.push_back(truth.sample(rng));
    const Mvn fit = fit_mvn(samples);
    for (int i = 0; i < 2; ++i) {
        const double tol = 3.0 * std::sqrt(truth.cov(i, i)) / std::sqrt(static_cast<double>(n));
        CHECK(std::abs(fit.mean(i) - truth.mean(i)) < tol);
    }
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(std::abs(fit.cov(i, j) - truth.cov(i, j)) / std::abs(truth.cov(i, i)) < 0.05);
}

TEST_CASE("fit_mvn round-trips the shipped cell model") {
    const GenerativeModel model = default_model();
    Rng rng(1234);
    std::vector<Eigen::VectorXd> samples;
    const int n = 50000;
    for (int i = 0; i < n; ++i) samples.push_back(model.cell_model.sample(rng));
    const Mvn fit = fit_mvn(samples);
    for (int i = 0; i < fit.dim(); ++i) {
        const double sd = std::sqrt(model.cell_model.cov(i, i));
        CHECK(std::abs(fit.mean(i) - model.cell_model.mean(i)) <
              4.0 * sd / std::sqrt(static_cast<double>(n)) + 1e-9);
    }
}

TEST_CASE("fit_mvn input validation") {
    CHECK_THROWS(fit_mvn({Eigen::VectorXd::Zero(3)}));
    std::vector<Eigen::VectorXd> bad{Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(4)};
    CHECK_THROWS(fit_mvn(bad));
}

TEST_CASE("gmm with one component reduces to fit_mvn") {
    Rng rng(5);
    std::vector<Eigen::VectorXd> samples;
    for (int i = 0; i < 200; ++i) {
        Eigen::VectorXd v(2);
        v << rng.normal(1.0, 2.0), rng.normal(-3.0, 0.5);
        samples.push_back(v);
    }
    const Mvn direct = fit_mvn(samples);
    const GmmFitResult em = fit_gmm(samples, 1);
    REQUIRE(em.model.k() == 1);
    CHECK((em.model.components[0].mean - direct.mean).norm() < 1e-9);
    CHECK((em.model.components[0].cov - direct.cov).norm() < 1e-9);
}

TEST_CASE("gmm recovers a planted two-component mixture") {
    Rng rng(17);
    std::vector<Eigen::VectorXd> samples;
    const Eigen::Vector2d mu1(0.0, 0.0), mu2(10.0, 10.0);  // 10 sigma apart
    for (int i = 0; i < 10000; ++i) {
        Eigen::VectorXd v(2);
        if (i % 2 == 0) v << mu1.x() + rng.normal(), mu1.y() + rng.normal();
        else v << mu2.x() + rng.normal(), mu2.y() + rng.normal();
        samples.push_back(v);
    }
    const GmmFitResult res = fit_gmm(samples, 2);

    // log-likelihood never decreases
    for (size_t i = 1; i < res.log_likelihood.size(); ++i)
        CHECK(res.log_likelihood[i] >=
              res.log_likelihood[i - 1] - 1e-8 * std::abs(res.log_likelihood[i - 1]));

    // means within 5% (of the separation scale), up to permutation
    const auto& c0 = res.model.components[0].mean;
    const auto& c1 = res.model.components[1].mean;
    const double d_direct = (c0 - mu1).norm() + (c1 - mu2).norm();
    const double d_swapped = (c0 - mu2).norm() + (c1 - mu1).norm();
    CHECK(std::min(d_direct, d_swapped) < 0.05 * (mu2 - mu1).norm());
}

TEST_CASE("gmm responsibilities sum to one with six components") {
    const GenerativeModel model = default_model();
    Rng rng(7);
    std::vector<Eigen::VectorXd> samples;
    for (int k = 0; k < 6; ++k)
        for (int i = 0; i < 60; ++i)
            samples.push_back(model.debris_model.components[k].sample(rng));
    const GmmFitResult res = fit_gmm(samples, 6);
    REQUIRE(res.model.k() == 6);
    for (double w : res.model.weights) CHECK(w == doctest::Approx(1.0 / 6.0));
    for (int i = 0; i < 20; ++i) {
        const Eigen::VectorXd r = res.model.responsibilities(samples[i * 15]);
        CHECK(r.sum() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(r.minCoeff() >= 0.0);
    }
}

TEST_CASE("gmm rejects too-few samples") {
    std::vector<Eigen::VectorXd> samples(5, Eigen::VectorXd::Zero(3));
    CHECK_THROWS_WITH(fit_gmm(samples, 2), "too few samples");
}

TEST_CASE("count curve interpolates four exact points") {
    std::vector<std::pair<double, double>> pts;
    for (double x : {1.0, 2.0, 3.0, 4.0}) pts.push_back({x, x * x * x - 2.0 * x + 1.0});
    const CountCurve cc = fit_count_curve(pts);
    CHECK(cc.coeffs[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cc.coeffs[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    CHECK(cc.coeffs[2] == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(cc.coeffs[3] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("count curve on constant data is constant") {
    std::vector<std::pair<double, double>> pts;
    for (double x : {1.0, 10.0, 100.0, 250.0, 400.0}) pts.push_back({x, 42.0});
    const CountCurve cc = fit_count_curve(pts);
    CHECK(std::abs(cc.coeffs[0]) < 1e-9);
    CHECK(std::abs(cc.coeffs[1]) < 1e-9);
    CHECK(std::abs(cc.coeffs[2]) < 1e-9);
    CHECK(cc.coeffs[3] == doctest::Approx(42.0));
}

TEST_CASE("cubic fit residual never exceeds the best quadratic") {
    Rng rng(31);
    std::vector<std::pair<double, double>> pts;
    const double concs[] = {1, 10, 20, 50, 100, 200, 400};
    for (double c : concs) pts.push_back({c, 100.0 + 0.5 * c + rng.normal(0.0, 20.0)});
    const CountCurve cubic = fit_count_curve(pts);

    // quadratic least squares oracle
    Eigen::MatrixXd A(7, 3);
    Eigen::VectorXd b(7);
    for (int i = 0; i < 7; ++i) {
        A(i, 0) = concs[i] * concs[i];
        A(i, 1) = concs[i];
        A(i, 2) = 1.0;
        b(i) = pts[i].second;
    }
    const Eigen::VectorXd q = A.colPivHouseholderQr().solve(b);
    double res_cubic = 0.0, res_quad = 0.0;
    for (int i = 0; i < 7; ++i) {
        const double c = concs[i];
        const double fc = ((cubic.coeffs[0] * c + cubic.coeffs[1]) * c + cubic.coeffs[2]) * c +
                          cubic.coeffs[3];
        const double fq = q(0) * c * c + q(1) * c + q(2);
        res_cubic += (fc - pts[i].second) * (fc - pts[i].second);
        res_quad += (fq - pts[i].second) * (fq - pts[i].second);
    }
    CHECK(res_cubic <= res_quad + 1e-9);
}

TEST_CASE("count curve requires four distinct concentrations") {
    std::vector<std::pair<double, double>> pts{{1, 1}, {1, 2}, {2, 3}, {3, 4}};
    CHECK_THROWS(fit_count_curve(pts));
}

TEST_CASE("count curve clamps to its valid range and at zero") {
    CountCurve cc;
    cc.coeffs = {0.0, 0.0, -1.0, 10.0};  // f(c) = 10 - c
    cc.lo = 1.0;
    cc.hi = 400.0;
    CHECK(cc.eval(0.5) == cc.eval(1.0));
    CHECK(cc.eval(1000.0) == cc.eval(400.0));
    CHECK(cc.eval(50.0) == 0.0);  // clamped at zero
}

TEST_CASE("sample_shape is deterministic and respects invariants") {
    const GenerativeModel model = default_model();
    Rng a(42), b(42);
    for (int i = 0; i < 50; ++i) {
        const ShapeVector s1 = sample_shape(model, label::kCell, a);
        const ShapeVector s2 = sample_shape(model, label::kCell, b);
        CHECK(s1.area == s2.area);
        CHECK(s1.fiber_length == s2.fiber_length);
        CHECK(s1.area > 0.0);
        CHECK(s1.solidity > 0.0);
        CHECK(s1.solidity <= 1.0);
        CHECK(s1.major_axis >= s1.minor_axis);
        CHECK(s1.minor_axis > 0.0);
        CHECK(s1.n_branches >= 0.0);
        CHECK(s1.n_branches == std::round(s1.n_branches));
    }
    CHECK_THROWS(sample_shape(model, label::kFree, a));
}

TEST_CASE("pre-clamp cell draws have the model mean") {
    const GenerativeModel model = default_model();
    Rng rng(4242);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(7);
    const int n = 100000;
    for (int i = 0; i < n; ++i) acc += model.cell_model.sample(rng);
    acc /= n;
    for (int i = 0; i < 7; ++i) {
        const double sd = std::sqrt(model.cell_model.cov(i, i));
        CHECK(std::abs(acc(i) - model.cell_model.mean(i)) <
              4.0 * sd / std::sqrt(static_cast<double>(n)) + 1e-12);
    }
}

TEST_CASE("debris draws come from the requested component") {
    // zero variance everywhere isolates the component means
    GenerativeModel m = default_model();
    for (int k = 0; k < m.debris_model.k(); ++k) {
        m.debris_model.components[k].cov.setZero();
        m.debris_model.components[k].finalize();
    }
    Rng rng(3);
    const ShapeVector s = sample_shape(m, label::debris(3), rng);
    const Eigen::VectorXd expect = m.debris_model.components[2].mean;
    CHECK(s.area == doctest::Approx(std::max(expect(0), 4.0)));
    CHECK(s.fiber_length ==
          doctest::Approx(std::clamp(expect(5), 1.0, 8.0 * std::sqrt(s.area))));
}

TEST_CASE("model file round trip") {
    const GenerativeModel model = default_model();
    const std::string path = "test_model_roundtrip.txt";
    save_model(model, path);
    const GenerativeModel back = load_model(path);
    CHECK((back.cell_model.mean - model.cell_model.mean).norm() < 1e-12);
    CHECK((back.cell_model.cov - model.cell_model.cov).norm() < 1e-12);
    REQUIRE(back.debris_model.k() == model.debris_model.k());
    for (int k = 0; k < model.debris_model.k(); ++k)
        CHECK((back.debris_model.components[k].mean - model.debris_model.components[k].mean)
                  .norm() < 1e-12);
    CHECK(back.dist_models.size() == model.dist_models.size());
    CHECK(back.train_image_area_um2 == model.train_image_area_um2);
    for (int i = 0; i < 4; ++i)
        CHECK(back.count_curve.coeffs[i] == model.count_curve.coeffs[i]);
    std::remove(path.c_str());
}

TEST_CASE("nearest distribution model selection") {
    const GenerativeModel model = default_model();
    CHECK(&model.nearest_dist_model(1.0) == &model.dist_models.at(1));
    CHECK(&model.nearest_dist_model(7.0) == &model.dist_models.at(10));
    CHECK(&model.nearest_dist_model(350.0) == &model.dist_models.at(400));
}
