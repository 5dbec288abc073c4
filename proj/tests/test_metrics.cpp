#include "evtraj/metrics.hpp"
#include "evtraj/motion.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace evtraj;

namespace {

FlowMap uniform(int w, int h, Vec2 v, double tau = 1.0)
{
    FlowMap f(w, h, tau);
    for(Vec2& x : f.values) x = v;
    return f;
}

FlowMap random_flow(std::uint64_t seed, int w, int h, double tau = 1.0)
{
    Rng rng(seed);
    FlowMap f(w, h, tau);
    for(Vec2& x : f.values) x = {rng.uniform(-6, 6), rng.uniform(-6, 6)};
    return f;
}

} // namespace

TEST_CASE("epe examples")
{
    const FlowMap a = random_flow(1, 8, 6);
    CHECK(epe(a, a) == 0.0);
    CHECK(epe(uniform(4, 4, {3, 4}), uniform(4, 4, {0, 0})) == 5.0);

    FlowMap half = uniform(4, 2, {0, 0});
    for(int x = 0; x < 4; ++x) half.at(0, x) = {2, 0};
    CHECK(epe(half, uniform(4, 2, {0, 0})) == 1.0);

    CHECK_THROWS_AS(epe(a, a, PixelMask(48, 0)), std::invalid_argument);
    CHECK_THROWS_AS(epe(a, random_flow(1, 6, 8)), std::invalid_argument);
    CHECK_THROWS_AS(epe(a, a, PixelMask(3, 1)), std::invalid_argument);
}

TEST_CASE("angular error examples")
{
    const FlowMap a = random_flow(2, 5, 5);
    CHECK(angular_error(a, a) == doctest::Approx(0.0).scale(1).epsilon(1e-6));
    CHECK(angular_error(uniform(3, 3, {1, 0}), uniform(3, 3, {0, 0})) == doctest::Approx(45.0).epsilon(1e-12));
    CHECK(angular_error(uniform(3, 3, {0, 1}), uniform(3, 3, {1, 0})) == doctest::Approx(60.0).epsilon(1e-12));
    CHECK_THROWS_AS(angular_error(a, a, PixelMask(25, 0)), std::invalid_argument);

    const FlowMap b = random_flow(3, 5, 5);
    CHECK(std::abs(angular_error(a, b) - angular_error(b, a)) <= 1e-9);
}

TEST_CASE("n-pixel error examples")
{
    const FlowMap g = uniform(4, 4, {0, 0});
    CHECK(n_pixel_error(g, g, 1.0) == 0.0);
    const FlowMap e = uniform(4, 4, {1.5, 2.0}); // 2.5 px
    CHECK(n_pixel_error(e, g, 2.0) == 100.0);
    CHECK(n_pixel_error(e, g, 3.0) == 0.0);
    CHECK_THROWS_AS(n_pixel_error(e, g, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(n_pixel_error(e, g, 1.0, PixelMask(16, 0)), std::invalid_argument);
}

TEST_CASE("tepe examples")
{
    BezierField lin(1, 2, 2);
    for(Vec2& p : lin.points()) p = {10, 0};
    std::vector<FlowMap> gt{uniform(2, 2, {2.5, 0}, 0.5), uniform(2, 2, {10, 0}, 1.0)};
    const TrajectoryError t = tepe_tae(lin, gt);
    CHECK(t.tepe == 1.25);
    CHECK(t.epe_per_tau == std::vector<double>{2.5, 0.0});

    // Exact fit.
    BezierField quad(2, 2, 2);
    for(int y = 0; y < 2; ++y)
        for(int x = 0; x < 2; ++x) quad.point(2, y, x) = {10, 0}; // 10τ²
    CHECK(tepe_tae(quad, gt).tepe == 0.0);

    // Single endpoint reduces to EPE.
    const FlowMap g1 = random_flow(5, 2, 2, 1.0);
    const std::vector<FlowMap> one{g1};
    CHECK(tepe_tae(lin, one).tepe == epe(evaluate(lin, 1.0), g1));
    CHECK(tepe_tae(lin, one).tae == angular_error(evaluate(lin, 1.0), g1));

    CHECK_THROWS_AS(tepe_tae(lin, std::vector<FlowMap>{}), std::invalid_argument);
    CHECK_THROWS_AS(tepe_tae(lin, gt, PixelMask(4, 0)), std::invalid_argument);
    const std::vector<FlowMap> zero_tau{uniform(2, 2, {}, 0.0)};
    CHECK_THROWS_AS(tepe_tae(lin, zero_tau), std::out_of_range);
}

TEST_CASE("trajectory loss examples")
{
    BezierField f(1, 3, 3);
    for(Vec2& p : f.points()) p = {2, 1};
    const std::vector<FlowMap> exact{uniform(3, 3, {1, 0.5}, 0.5), uniform(3, 3, {2, 1}, 1.0)};
    const std::vector<BezierField> one{f};
    CHECK(trajectory_loss(one, exact) == 0.0);

    const std::vector<FlowMap> off{uniform(3, 3, {3, 2}, 1.0)};
    CHECK(trajectory_loss(one, off) == 2.0);

    const std::vector<BezierField> two{f, f};
    CHECK(trajectory_loss(two, off, 0.8) == doctest::Approx(1.8 * trajectory_loss(one, off)).epsilon(1e-15));

    // Older iterates count less.
    BezierField worse = f;
    for(Vec2& p : worse.points()) p = {0, 0};
    const std::vector<BezierField> late_bad{f, worse}, early_bad{worse, f};
    CHECK(trajectory_loss(early_bad, off) < trajectory_loss(late_bad, off));

    CHECK_THROWS_AS(trajectory_loss(std::vector<BezierField>{}, off), std::invalid_argument);
    CHECK_THROWS_AS(trajectory_loss(one, off, 0.0), std::invalid_argument);
}

TEST_CASE("metric properties")
{
    const FlowMap p = random_flow(7, 10, 10);
    const FlowMap g = random_flow(8, 10, 10);
    // scaling
    FlowMap p3 = p, g3 = g;
    for(Vec2& v : p3.values) v = 3.0 * v;
    for(Vec2& v : g3.values) v = 3.0 * v;
    CHECK(epe(p3, g3) == doctest::Approx(3.0 * epe(p, g)).epsilon(1e-12));
    const std::vector<FlowMap> pv{p}, gv{g}, pv3{p3}, gv3{g3};
    const MetricReport r = evaluate_metrics(pv, gv);
    const MetricReport r3 = evaluate_metrics(pv3, gv3);
    CHECK(r3.tepe == doctest::Approx(3.0 * r.tepe).epsilon(1e-12));
    CHECK(r.npe1 >= r.npe2);
    CHECK(r.npe2 >= r.npe3);
    CHECK(r3.npe1 >= r3.npe2);
    CHECK(r3.npe2 >= r3.npe3);
    CHECK(r.pixels == 100);
    CHECK(r.coverage == 1.0);

    // masks: values outside do not matter
    PixelMask m(100, 0);
    for(int k = 0; k < 50; ++k) m[k * 2] = 1;
    FlowMap q = p;
    for(std::size_t k = 1; k < 100; k += 2) q.values[k] = {1e3, -1e3};
    CHECK(epe(q, g, m) == epe(p, g, m));
    CHECK(angular_error(q, g, m) == angular_error(p, g, m));
    CHECK(n_pixel_error(q, g, 2.0, m) == n_pixel_error(p, g, 2.0, m));

    // gt's own mask is honored
    FlowMap gm = g;
    gm.mask = m;
    CHECK(epe(q, gm) == epe(p, g, m));
    const std::vector<FlowMap> gmv{gm}, qv{q};
    CHECK(evaluate_metrics(qv, gmv).coverage == 0.5);
}

TEST_CASE("pairwise sum")
{
    std::vector<double> v(1000);
    Rng rng(1);
    for(double& x : v) x = rng.uniform(-1, 1);
    double naive = 0;
    for(double x : v) naive += x;
    CHECK(pairwise_sum(v) == doctest::Approx(naive).epsilon(1e-12));
    CHECK(pairwise_sum(v) == pairwise_sum(v));
    CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}

TEST_CASE("evaluate_metrics uses the largest tau as the endpoint")
{
    const std::vector<FlowMap> gt{uniform(2, 2, {4, 0}, 1.0), uniform(2, 2, {1, 0}, 0.25)};
    const std::vector<FlowMap> pred{uniform(2, 2, {4, 3}, 1.0), uniform(2, 2, {1, 0}, 0.25)};
    const MetricReport r = evaluate_metrics(pred, gt);
    CHECK(r.epe == 3.0);
    CHECK(r.tepe == 1.5);
    CHECK(r.npe2 == 100.0);
    CHECK(r.npe3 == 0.0);
}
