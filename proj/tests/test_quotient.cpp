#include "catch_amalgamated.hpp"

#include "isf/examples.hpp"
#include "isf/quotient.hpp"
#include "oracles.hpp"

using namespace isf;

namespace {

using RP = RotationSuspension::point_type;
using SP = ShiftSuspension::point_type;

const RotationParams rprm;

// Heights concentrated on and around D and I(D), where chains matter.
RP pick_rotation(Rng& rng)
{
    const double u = rng.uniform();
    double h;
    if (u < 0.2)
        h = 0.5;
    else if (u < 0.4)
        h = 0.75;
    else if (u < 0.75)
        h = 0.4 + 0.45 * rng.uniform();
    else
        h = rng.uniform();
    return {{rng.uniform()}, h};
}

SP pick_shift(Rng& rng, const ShiftSuspension& flow)
{
    auto p = flow.sample(rng);
    const double u = rng.uniform();
    if (u < 0.2)
        p.height = 1.0;
    else if (u < 0.4)
        p.height = 3.0;
    return p;
}

template <class Sys>
double near_glue(const Sys& sys, const typename Sys::Point& p)
{
    return std::min(sys.D.distance_to(p), sys.image.distance_to(p));
}

} // namespace

TEST_CASE("classes follow the relation", "[quotient]")
{
    const auto sys = rotation_example();
    const RP off{{0.3}, 0.2};
    CHECK(project(*sys, off).size() == 1);

    const RP d{{0.2}, 0.5};
    const auto cd = project(*sys, d);
    REQUIRE(cd.size() == 2);
    CHECK(cd.representatives[1].height == 0.75);
    CHECK(cd.representatives[1].base.angle == Catch::Approx(0.2 + rprm.theta2));

    const auto ci = project(*sys, cd.representatives[1]);
    REQUIRE(ci.size() == 2);
    CHECK(sys->flow.distance(ci.representatives[1], d) < 1e-15);

    // two preimages: x, I(x) and the other half-angle point
    const auto dbl = doubling_rotation_double();
    const auto c3 = project(*dbl, RP{{0.1}, 0.5});
    CHECK(c3.size() == 3);
    CHECK(c3.size() <= 2u + dbl->I.max_preimages);
    CHECK(quotient_metric(*dbl, RP{{0.1}, 0.5}, RP{{0.6}, 0.5}) == 0.0);
}

TEST_CASE("points glued by the impulse are at distance zero", "[quotient]")
{
    const auto sys = rotation_example();
    const RP x{{0.2}, 0.5};
    const RP y{{wrap_unit(0.2 + rprm.theta2)}, 0.75};
    CHECK(quotient_metric(*sys, x, x) == 0.0);
    CHECK(quotient_metric(*sys, x, y) == 0.0);
    for (double h : {1e-6, 1e-3, 0.05, 0.2}) {
        const RP yh{y.base, 0.75 + h};
        const double dq = quotient_metric(*sys, x, yh);
        CHECK(dq <= h + 1e-15);
        CHECK(dq == Catch::Approx(h).margin(1e-12)); // nothing is closer than the lift
    }
}

TEST_CASE("chains of three terms can beat chains of two", "[quotient]")
{
    const auto sys = rotation_example();
    // x -> D, jump, drop 1/4 to D, jump, -> y
    const RP x{{0.3}, 0.55};
    const RP y{{wrap_unit(0.3 + 2.0 * rprm.theta2)}, 0.7};
    const double two = quotient_metric(*sys, x, y, {2});
    const double three = quotient_metric(*sys, x, y, {3});
    CHECK(two == Catch::Approx(0.1 + circle_distance({0.0}, {rprm.theta2})).margin(1e-12));
    CHECK(three <= 0.35 + 1e-12);
    CHECK(three < two - 0.01);
    CHECK(quotient_metric(*sys, x, y, {1}) == sys->flow.distance(x, y));
}

TEST_CASE("truncated chain infimum matches the brute-force search", "[quotient]")
{
    const auto sys = rotation_example();
    Rng rng(101);
    double worst = 0.0, worst_random = -1.0, gap23 = 0.0;
    for (int i = 0; i < 1500; ++i) {
        const RP x = pick_rotation(rng), y = pick_rotation(rng);
        const double d3 = quotient_metric(*sys, x, y, {3});
        const auto corners = oracle::rotation_corner_cloud(rprm.theta1, rprm.theta2, x, y);
        const double brute = oracle::rotation_chain_search(sys->flow, rprm.theta2, x, y, corners, 3);
        worst = std::max(worst, std::abs(brute - d3));

        // a plain random cloud can only do worse
        std::vector<RP> cloud;
        for (int k = 0; k < 30; ++k)
            cloud.push_back({{rng.uniform()}, 0.5});
        worst_random = std::max(worst_random, d3 - oracle::rotation_chain_search(sys->flow, rprm.theta2, x, y,
                                                                                cloud, 3));
        gap23 = std::max(gap23, quotient_metric(*sys, x, y, {2}) - d3);
        if (i < 150)
            CHECK(quotient_metric(*sys, x, y, {4}) == Catch::Approx(d3).margin(1e-12));
    }
    CHECK(worst <= 1e-9);
    CHECK(worst_random <= 1e-12);
    CHECK(gap23 >= 0.0);
}

TEST_CASE("quotient metric axioms on sampled classes", "[quotient]")
{
    const auto sys = rotation_example();
    Rng rng(7);
    std::vector<QuotientClass<RotationSuspension>> cls;
    std::vector<RP> pts;
    for (int i = 0; i < 40; ++i) {
        pts.push_back(pick_rotation(rng));
        cls.push_back(project(*sys, pts.back()));
    }
    const std::size_t n = cls.size();
    std::vector<std::vector<double>> D(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            D[i][j] = quotient_metric(*sys, cls[i], cls[j]);
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(D[i][i] == 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            CHECK(std::abs(D[i][j] - D[j][i]) <= 1e-12);
            CHECK(D[i][j] <= sys->flow.distance(pts[i], pts[j]) + 1e-15);
            // chains through D only pay off within d~ of D u I(D)
            const auto pair = closest_representatives(sys->flow, cls[i], cls[j]);
            if (D[i][j] < std::min(near_glue(*sys, pts[i]), near_glue(*sys, pts[j])))
                CHECK(pair.distance <= D[i][j] + 1e-12);
            for (std::size_t k = 0; k < n; ++k)
                CHECK(D[i][k] <= D[i][j] + D[j][k] + 1e-12);
        }
    }
}

TEST_CASE("no representative pair within twice d~ next to the gluing", "[quotient]")
{
    // just below D and just above I(D): one jump joins them, but both
    // classes are singletons a quarter apart
    const auto sys = rotation_example();
    for (double h : {1e-2, 1e-4}) {
        const RP x{{0.3}, 0.5 - h};
        const RP y{{wrap_unit(0.3 + rprm.theta2)}, 0.75 + h};
        const auto cx = project(*sys, x), cy = project(*sys, y);
        CHECK(cx.size() == 1);
        CHECK(cy.size() == 1);
        const double dq = quotient_metric(*sys, cx, cy);
        CHECK(dq == Catch::Approx(2.0 * h).margin(1e-12));
        CHECK(closest_representatives(sys->flow, cx, cy).distance >= 0.25);
    }
}

TEST_CASE("H is a bijection onto its image and rejects points outside X_xi", "[quotient]")
{
    const auto sys = rotation_example();
    CHECK_THROWS_AS(H(*sys, RP{{0.1}, 0.5}), std::domain_error);
    CHECK_THROWS_AS(H(*sys, RP{{0.1}, 0.5 + 0.5 * rprm.xi}), std::domain_error);
    CHECK_NOTHROW(H(*sys, RP{{0.1}, 0.75}));

    Rng rng(3);
    int tried = 0;
    while (tried < 1000) {
        const RP p = sys->sample_restricted(rng);
        if (!in_X_xi(*sys, p))
            continue;
        ++tried;
        const auto c = H(*sys, p);
        CHECK(H_inverse(*sys, c) == p);
        // at most one member in X_xi
        int inside = 0;
        for (const auto& r : c.representatives)
            inside += in_X_xi(*sys, r) ? 1 : 0;
        CHECK(inside == 1);
    }
}

TEST_CASE("every point of X minus D_xi has a representative in X_xi", "[quotient]")
{
    for (double xi : {0.05, 0.125, 0.24}) {
        RotationParams prm;
        prm.xi = xi;
        const auto sys = rotation_example(prm);
        Rng rng(11);
        for (int i = 0; i < 1000; ++i) {
            RP p = i % 4 == 0 ? RP{{rng.uniform()}, 0.5} : sys->flow.sample(rng);
            if (in_D_xi(*sys, p))
                continue;
            CHECK(representative_in_X_xi(*sys, project(*sys, p)).has_value());
        }
    }
}

TEST_CASE("quotient semiflow is conjugate to psi through H", "[quotient]")
{
    const auto sys = rotation_example();
    Rng rng(5);
    for (int i = 0; i < 300; ++i) {
        const RP p = sys->sample_restricted(rng);
        if (!in_X_xi(*sys, p))
            continue;
        const auto c = H(*sys, p);
        CHECK(quotient_evolve(*sys, c, 0.0).representatives == c.representatives);
        for (double t : {0.3, 1.0, 4.7}) {
            const auto lhs = quotient_evolve(*sys, c, t);
            const auto rhs = H(*sys, impulsive_trajectory(*sys, p, t));
            CHECK(quotient_metric(*sys, lhs, rhs) == 0.0);
        }
    }
    CHECK_THROWS_AS(quotient_evolve(*sys, project(*sys, RP{{0.1}, 0.55}), 1.0), std::domain_error);
}

TEST_CASE("continuity probe: images of close points stay close", "[quotient]")
{
    const auto sys = rotation_example();
    const auto rows = continuity_probe(*sys, {1e-1, 1e-2, 1e-3, 1e-4}, 250, 1.0, 17);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) {
        INFO("r = " << r.radius << " pairs " << r.pairs << " worst " << r.worst_image);
        CHECK(r.pairs >= 100);
        // the rotation semiflow moves close points rigidly apart from the
        // impulse, which is an isometry D -> I(D)
        CHECK(r.worst_image <= 2.0 * r.radius + 1e-12);
    }
}

TEST_CASE("shift quotient: classes, bounds and H", "[quotient]")
{
    const auto sys = shift_example();
    Rng rng(23);
    for (int i = 0; i < 300; ++i) {
        const SP x = pick_shift(rng, sys->flow), y = pick_shift(rng, sys->flow);
        const auto cx = project(*sys, x), cy = project(*sys, y);
        CHECK(cx.size() == (x.height == 1.0 || x.height == 3.0 ? 2u : 1u));
        const double dq = quotient_metric(*sys, cx, cy);
        CHECK(dq <= sys->flow.distance(x, y) + 1e-15);
        CHECK(dq == Catch::Approx(quotient_metric(*sys, cy, cx)).margin(1e-12));
        if (dq < std::min(near_glue(*sys, x), near_glue(*sys, y)))
            CHECK(closest_representatives(sys->flow, cx, cy).distance <= dq + 1e-12);
    }
    // I flips every digit and lifts 1 -> 3
    const SP d{ShiftPoint::random(rng, sys->flow.window(), sys->flow.tail()), 1.0};
    CHECK(quotient_metric(*sys, d, sys->I.apply(d)) == 0.0);

    int tried = 0;
    while (tried < 500) {
        const SP p = sys->sample_restricted(rng);
        if (!in_X_xi(*sys, p))
            continue;
        ++tried;
        CHECK(H_inverse(*sys, H(*sys, p)) == p);
    }
    CHECK_THROWS_AS(H(*sys, SP{d.base, 1.5}), std::domain_error);
}
