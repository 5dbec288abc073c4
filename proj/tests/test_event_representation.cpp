#include "fixtures.hpp"

#include "evtraj/event_representation.hpp"

#include <doctest.h>

#include <cmath>

using namespace evtraj;

TEST_CASE("normalized event time uses the B-1 scale")
{
    CHECK(normalize_event_time(100.0, 100.0, 900.0, 9) == 0.0);
    CHECK(normalize_event_time(900.0, 100.0, 900.0, 9) == 8.0);
    CHECK(normalize_event_time(4000.0, 0.0, 8000.0, 9) == 4.0);
    CHECK_THROWS_AS(normalize_event_time(5.0, 5.0, 5.0, 9), std::invalid_argument);
    CHECK_THROWS_AS(normalize_event_time(9000.0, 0.0, 8000.0, 9), std::out_of_range);
    CHECK_THROWS_AS(normalize_event_time(-1.0, 0.0, 8000.0, 9), std::out_of_range);
}

TEST_CASE("temporal splat weights")
{
    const TemporalSplat a = temporal_splat(2.25);
    CHECK(a.bin == 2);
    CHECK(a.lower == 0.75);
    CHECK(a.upper == 0.25);
    const TemporalSplat b = temporal_splat(4.0);
    CHECK(b.bin == 4);
    CHECK(b.lower == 1.0);
    CHECK(b.upper == 0.0);
}

TEST_CASE("empty stream gives a zero grid of B bins")
{
    const EventStream s{16, 12, {}};
    const VoxelGrid g = build_base_voxel_grid(s, 100000, 200000, 5, 5);
    CHECK(g.bins() == 9);
    CHECK(g.height() == 12);
    CHECK(g.width() == 16);
    CHECK(g.sum() == 0.0);
    for(float v : g.values()) CHECK(v == 0.0f);
}

TEST_CASE("event at t_ref lands on bin M-1")
{
    EventStream s{8, 10, {Event{3, 7, 100000, 1}}};
    const VoxelGrid g = build_base_voxel_grid(s, 100000, 200000, 5, 5);
    for(int b = 0; b < g.bins(); ++b)
        for(int y = 0; y < g.height(); ++y)
            for(int x = 0; x < g.width(); ++x) CHECK(g.at(b, y, x) == (b == 4 && y == 7 && x == 3 ? 1.0f : 0.0f));
    CHECK(g.bin_timestamps()[4] == 100000.0);
    CHECK(g.bin_timestamps().back() == 200000.0);
}

TEST_CASE("opposite polarities cancel")
{
    EventStream s{4, 4, {Event{1, 2, 150000, 1}, Event{1, 2, 150000, -1}}};
    const VoxelGrid g = build_base_voxel_grid(s, 100000, 200000, 5, 5);
    for(float v : g.values()) CHECK(v == 0.0f);
}

TEST_CASE("closed window includes both ends, excludes outside")
{
    // dt = 25000, t0 = 0.
    EventStream s{2, 1, {Event{0, 0, -1, 1}, Event{0, 0, 0, 1}, Event{1, 0, 200000, -1}, Event{1, 0, 200001, 1}}};
    const VoxelGrid g = build_base_voxel_grid(s, 100000, 200000, 5, 5);
    CHECK(g.at(0, 0, 0) == 1.0f);
    CHECK(g.at(8, 0, 1) == -1.0f);
    CHECK(g.sum() == 0.0);
}

TEST_CASE("event between bins splits linearly")
{
    // t = t0 + 2.25 bins
    EventStream s{1, 1, {Event{0, 0, 56250, 1}}};
    const VoxelGrid g = build_base_voxel_grid(s, 100000, 200000, 5, 5);
    CHECK(g.at(2, 0, 0) == 0.75f);
    CHECK(g.at(3, 0, 0) == 0.25f);
}

TEST_CASE("budget and layout errors")
{
    const EventStream s{64, 64, {}};
    CHECK_THROWS_AS(build_base_voxel_grid(s, 0, 1000, 5, 5, Exec::serial, 1000), std::length_error);
    CHECK_THROWS_AS(build_base_voxel_grid(s, 0, 1000, 1, 5), std::invalid_argument);
    CHECK_THROWS_AS(build_base_voxel_grid(s, 1000, 1000, 5, 5), std::invalid_argument);
    EventStream bad{4, 4, {Event{4, 0, 10, 1}}};
    CHECK_THROWS_AS(build_base_voxel_grid(bad, 0, 1000, 2, 2), std::invalid_argument);
}

TEST_CASE("context grid bins")
{
    const EventStream s = test::random_stream(3, 8, 8, 500, 0, 400000);
    SUBCASE("M=N=5")
    {
        const VoxelGrid base = build_base_voxel_grid(s, 200000, 400000, 5, 5);
        const VoxelGrid ctx = extract_context_grid(base, 5, 5);
        CHECK(ctx.bins() == 5);
        for(int b = 0; b < 5; ++b) {
            CHECK(ctx.bin_timestamps()[b] == base.bin_timestamps()[b + 4]);
            const auto a = ctx.bin(b);
            const auto c = base.bin(b + 4);
            CHECK(std::equal(a.begin(), a.end(), c.begin()));
        }
    }
    SUBCASE("M=25, N=41")
    {
        const VoxelGrid base = build_base_voxel_grid(s, 200000, 400000, 25, 41);
        CHECK(base.bins() == 65);
        const VoxelGrid ctx = extract_context_grid(base, 25, 41);
        CHECK(ctx.bins() == 41);
        CHECK(ctx.bin_timestamps().front() == base.bin_timestamps()[24]);
        CHECK(ctx.bin_timestamps().back() == base.bin_timestamps()[64]);
    }
    SUBCASE("M=N=2")
    {
        const VoxelGrid base = build_base_voxel_grid(s, 200000, 400000, 2, 2);
        CHECK(base.bins() == 3);
        const VoxelGrid ctx = extract_context_grid(base, 2, 2);
        CHECK(ctx.bin_timestamps().front() == base.bin_timestamps()[1]);
        CHECK(ctx.bin_timestamps().back() == base.bin_timestamps()[2]);
    }
    const VoxelGrid base = build_base_voxel_grid(s, 200000, 400000, 5, 5);
    CHECK_THROWS(extract_context_grid(base, 4, 5));
}

TEST_CASE("correlation view layout")
{
    const EventStream s = test::random_stream(4, 8, 8, 500, 0, 400000);
    {
        const VoxelGrid base = build_base_voxel_grid(s, 200000, 400000, 25, 41);
        const ViewSet v = extract_correlation_views(base, 25, 41, 8, 6);
        REQUIRE(v.views.size() == 6);
        const double taus[] = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
        for(int i = 0; i < 6; ++i) {
            CHECK(v.views[i].tau == doctest::Approx(taus[i]).epsilon(1e-15));
            CHECK(v.views[i].grid.bins() == 25);
            CHECK(v.views[i].grid.bin_timestamps().back() == base.bin_timestamps()[24 + 8 * i]);
        }
        CHECK(v.reference_index == 0);
        CHECK(v.views.back().grid.t_end() == 400000.0);
    }
    {
        const VoxelGrid base = build_base_voxel_grid(s, 200000, 400000, 5, 5);
        const ViewSet v = extract_correlation_views(base, 5, 5, 1, 5);
        const double taus[] = {0.0, 0.25, 0.5, 0.75, 1.0};
        for(int i = 0; i < 5; ++i) CHECK(v.views[i].tau == taus[i]);
        const ViewSet two = extract_correlation_views(base, 5, 5, 4, 2);
        CHECK(two.views[0].tau == 0.0);
        CHECK(two.views[1].tau == 1.0);
        CHECK_THROWS_AS(extract_correlation_views(base, 5, 5, 2, 4), std::out_of_range);

        // Reference bin shared between context and view 0.
        const auto c0 = v.context.bin(0);
        const auto r = v.views[0].grid.bin(4);
        CHECK(std::equal(c0.begin(), c0.end(), r.begin()));
    }
}

TEST_CASE("mass conservation, shift equivariance and kernel equivalence")
{
    for(std::uint64_t seed = 0; seed < 20; ++seed) {
        const EventStream s = test::random_stream(seed, 32, 24, 3000, 0, 1000000);
        const std::int64_t t_ref = 500000, t_target = 900000; // dt = 100000, t0 = 100000
        const VoxelGrid g = build_base_voxel_grid(s, t_ref, t_target, 5, 5, Exec::serial);
        double polarity = 0.0, magnitude = 0.0;
        for(const Event& e : s.events)
            if(e.t >= 100000 && e.t <= t_target) {
                polarity += e.p;
                magnitude += 1.0;
            }
        CHECK(std::abs(g.sum() - polarity) <= 1e-5 * magnitude);

        const VoxelGrid par = build_base_voxel_grid(s, t_ref, t_target, 5, 5, Exec::parallel);
        CHECK(par == g);

        const VoxelGrid ref = reference::build_base_voxel_grid(s, t_ref, t_target, 5, 5);
        REQUIRE(ref.values().size() == g.values().size());
        for(std::size_t i = 0; i < g.values().size(); ++i) CHECK(g.values()[i] == doctest::Approx(ref.values()[i]).epsilon(1e-5));

        EventStream shifted = s;
        const std::int64_t offset = 123456789;
        for(Event& e : shifted.events) e.t += offset;
        const VoxelGrid gs = build_base_voxel_grid(shifted, t_ref + offset, t_target + offset, 5, 5, Exec::serial);
        CHECK(std::equal(gs.values().begin(), gs.values().end(), g.values().begin(), g.values().end()));
    }
}

TEST_CASE("each event touches at most two bins with total p")
{
    Rng rng(11);
    for(int k = 0; k < 200; ++k) {
        const std::int64_t t = static_cast<std::int64_t>(rng.uniform(360.0, 1000.0));
        const std::int8_t p = rng.bernoulli(0.5) ? 1 : -1;
        EventStream s{2, 2, {Event{1, 1, t, p}}};
        const VoxelGrid g = build_base_voxel_grid(s, 600, 1000, 4, 6);
        int touched = 0;
        double total = 0.0;
        for(float v : g.values()) {
            if(v != 0.0f) ++touched;
            total += v;
        }
        CHECK(touched <= 2);
        CHECK(std::abs(total - p) < 1e-6);
    }
}

TEST_CASE("unsorted stream is rejected by validate")
{
    EventStream s{4, 4, {Event{0, 0, 10, 1}, Event{0, 0, 5, 1}}};
    CHECK_THROWS_AS(validate(s), std::invalid_argument);
    s.events[1].t = 10;
    CHECK_NOTHROW(validate(s));
}
