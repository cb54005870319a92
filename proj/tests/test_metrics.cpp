#include <doctest.h>

#include <cmath>

#include "deepjam/metrics.hpp"
#include "deepjam/rng.hpp"

using namespace deepjam;

namespace {

FunctionSample constant(const Grid& g, double value) {
    return FunctionSample{g, MatrixXd::Constant(g.num_points, 1, value)};
}

/// Brute-force reference: Riemann-free direct trapezoid over explicit sums.
double brute_ccsv(const std::vector<FunctionSample>& fs, const MatrixXd& ref) {
    const Grid& g = fs.front().grid;
    const double dt = g.spacing();
    double total = 0.0;
    for (int p = 0; p + 1 < g.num_points; ++p) {
        double left = 0.0, right = 0.0;
        for (const FunctionSample& f : fs) {
            left += std::pow(f.values(p, 0) - ref(p, 0), 2);
            right += std::pow(f.values(p + 1, 0) - ref(p + 1, 0), 2);
        }
        total += 0.5 * dt * (left + right);
    }
    return total / static_cast<double>(fs.size() - 1);
}

}  // namespace

TEST_CASE("identical functions have zero variance") {
    const Grid g(33, 0.0, 1.0);
    const std::vector<FunctionSample> fs(4, constant(g, 1.7));
    CHECK(ccsv(fs)[0] == doctest::Approx(0.0));
}

TEST_CASE("two constants 0 and 1 give mean-referenced CCSV one half") {
    const Grid g(17, 0.0, 1.0);
    const std::vector<FunctionSample> fs = {constant(g, 0.0), constant(g, 1.0)};
    CHECK(ccsv(fs)[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("constant functions reduce to the sample variance") {
    const Grid g(33, 0.0, 1.0);
    RandomStream rng(17);
    std::vector<FunctionSample> fs;
    std::vector<double> c;
    for (int i = 0; i < 7; ++i) {
        c.push_back(rng.gaussian());
        fs.push_back(constant(g, c.back()));
    }
    double mean = 0.0;
    for (double v : c) mean += v;
    mean /= 7.0;
    double var = 0.0;
    for (double v : c) var += (v - mean) * (v - mean);
    var /= 6.0;
    CHECK(ccsv(fs)[0] == doctest::Approx(var).epsilon(1e-12));
}

TEST_CASE("ccsv agrees with a brute-force quadrature oracle") {
    const Grid g(41, 0.0, 1.0);
    RandomStream rng(23);
    std::vector<FunctionSample> fs;
    for (int i = 0; i < 6; ++i) {
        MatrixXd v(g.num_points, 1);
        for (int p = 0; p < g.num_points; ++p)
            v(p, 0) = std::sin(2 * M_PI * g.point(p) + rng.gaussian()) + 0.3 * rng.gaussian();
        fs.push_back(FunctionSample{g, v});
    }
    MatrixXd mean = MatrixXd::Zero(g.num_points, 1);
    for (const FunctionSample& f : fs) mean += f.values;
    mean /= 6.0;
    CHECK(ccsv(fs)[0] == doctest::Approx(brute_ccsv(fs, mean)).epsilon(1e-12));

    // template-referenced variant
    FunctionSample ref{g, MatrixXd::Zero(g.num_points, 1)};
    for (int p = 0; p < g.num_points; ++p) ref.values(p, 0) = std::sin(2 * M_PI * g.point(p));
    CHECK(ccsv(fs, ref)[0] == doctest::Approx(brute_ccsv(fs, ref.values)).epsilon(1e-12));
}

TEST_CASE("scaling all functions scales CCSV quadratically") {
    const Grid g(33, 0.0, 1.0);
    RandomStream rng(29);
    std::vector<FunctionSample> fs, scaled;
    for (int i = 0; i < 5; ++i) {
        MatrixXd v(g.num_points, 1);
        for (int p = 0; p < g.num_points; ++p) v(p, 0) = rng.gaussian();
        fs.push_back(FunctionSample{g, v});
        scaled.push_back(FunctionSample{g, 3.0 * v});
    }
    CHECK(ccsv(scaled)[0] == doctest::Approx(9.0 * ccsv(fs)[0]).epsilon(1e-12));
}

TEST_CASE("mean_template_distance basics") {
    const Grid g(21, 0.0, 1.0);
    const FunctionSample mu = constant(g, 0.5);

    SUBCASE("matching mean gives zero") {
        const std::vector<FunctionSample> fs = {constant(g, 0.0), constant(g, 1.0)};
        CHECK(mean_template_distance(fs, mu)[0] == doctest::Approx(0.0));
    }
    SUBCASE("unit offset gives one") {
        const std::vector<FunctionSample> fs = {constant(g, 1.5)};
        CHECK(mean_template_distance(fs, mu)[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("random case against brute force") {
        RandomStream rng(31);
        std::vector<FunctionSample> fs;
        for (int i = 0; i < 4; ++i) {
            MatrixXd v(g.num_points, 1);
            for (int p = 0; p < g.num_points; ++p) v(p, 0) = rng.gaussian();
            fs.push_back(FunctionSample{g, v});
        }
        MatrixXd mean = MatrixXd::Zero(g.num_points, 1);
        for (const FunctionSample& f : fs) mean += f.values;
        mean /= 4.0;
        double expected = 0.0;
        const double dt = g.spacing();
        for (int p = 0; p + 1 < g.num_points; ++p)
            expected += 0.5 * dt *
                        (std::pow(mean(p, 0) - mu.values(p, 0), 2) + std::pow(mean(p + 1, 0) - mu.values(p + 1, 0), 2));
        CHECK(mean_template_distance(fs, mu)[0] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("variance report wires reductions") {
    const Grid g(17, 0.0, 1.0);
    const std::vector<FunctionSample> obs = {constant(g, 0.0), constant(g, 2.0)};
    const std::vector<FunctionSample> ali = {constant(g, 0.0), constant(g, 1.0)};
    const VarianceReport r = make_variance_report(obs, ali);
    CHECK(r.observed_ccsv[0] == doctest::Approx(2.0));
    CHECK(r.aligned_ccsv[0] == doctest::Approx(0.5));
    CHECK(r.ccsv_reduction_percent[0] == doctest::Approx(75.0));
    CHECK_FALSE(r.has_template());
}

TEST_CASE("ccsv needs at least two functions") {
    const Grid g(17, 0.0, 1.0);
    CHECK_THROWS_AS(ccsv({constant(g, 1.0)}), ValidationError);
}
