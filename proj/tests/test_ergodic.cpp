#include "catch_amalgamated.hpp"

#include "isf/ergodic.hpp"
#include "oracles.hpp"

using namespace isf;

namespace {

using RP = RotationSuspension::point_type;
using SP = ShiftSuspension::point_type;
using RPot = Potential<RotationSuspension>;
using SPot = Potential<ShiftSuspension>;

PressureEstimate rotation_pressure(const RPot& f)
{
    const auto sys = rotation_example();
    const auto sf = Semiflow<RotationSuspension>::impulsive(sys);
    PressureGrid g;
    g.epsilons = {0.25, 0.125};
    g.delta_fractions = {0.25, 0.125};
    g.times = {10, 20, 30};
    return pressure<RotationSuspension>(
        sf, f, excluding_times(sys, TimesLabel::tau), sys->eta, g, lattice_candidates(sf.flow()));
}

} // namespace

TEST_CASE("two-ceiling root", "[ergodic]")
{
    CHECK(bowen_walters_root(1.0, 1.0) == Catch::Approx(std::log(2.0)).margin(1e-10));
    CHECK(bowen_walters_root(2.0, 2.0) == Catch::Approx(std::log(2.0) / 2).margin(1e-10));
    const double a = std::numbers::pi, b = 2.0 + std::numbers::sqrt2;
    CHECK(bowen_walters_root(a, b) == Catch::Approx(oracle::two_ceiling_root(a, b)).margin(1e-10));
    CHECK(bowen_walters_root(a - 2, b - 2) == Catch::Approx(oracle::two_ceiling_root(a - 2, b - 2)).margin(1e-10));
    for (double c0 = 0.5; c0 < 5.0; c0 += 0.5)
        for (double c1 = 0.5; c1 < 5.0; c1 += 0.5) {
            CHECK(bowen_walters_root(c0 + 0.25, c1) < bowen_walters_root(c0, c1));
            CHECK(bowen_walters_root(c0, c1 + 0.25) < bowen_walters_root(c0, c1));
        }
    CHECK_THROWS_AS(bowen_walters_root(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(bowen_walters_root(1.0, -2.0), std::domain_error);
}

TEST_CASE("V* membership on the rotation example", "[ergodic]")
{
    const auto sys = rotation_example();
    const auto one = check_star_potential(sys, RPot::constant_value(1.0), 200, 1);
    CHECK(one.passed());
    CHECK(one.K == 0.0);

    const auto star = check_star_potential(sys, rotation_star_potential(), 200, 2);
    INFO(star.text());
    CHECK(star.invariant_on_D);
    CHECK(star.close_pairs > 0);
    CHECK(star.K < 1.0);

    const auto plain = check_star_potential(sys, rotation_plain_potential(), 200, 3);
    CHECK_FALSE(plain.passed());
    CHECK(plain.worst_jump == Catch::Approx(1.0));
    CHECK(!plain.jump_witness.empty());
    CHECK(plain.text().find("witness") != std::string::npos);
}

TEST_CASE("Birkhoff averages", "[ergodic]")
{
    const auto sys = rotation_example();
    const auto sf = Semiflow<RotationSuspension>::impulsive(sys);
    const RP p{{0.1}, 0.2};
    CHECK(birkhoff_average(sf, RPot::constant_value(2.5), p, 10.0) == 2.5);
    CHECK(birkhoff_average(sf, RPot::zero(), p, 10.0) == 0.0);
    CHECK_THROWS_AS(birkhoff_average(sf, RPot::zero(), p, 0.0), std::domain_error);

    const auto f = rotation_star_potential();
    const RotationParams prm;
    auto impulse = [&](RP q) { return RP{{wrap_unit(q.base.angle + prm.theta2)}, 0.75}; };
    const double t = 2000.0;
    const double a1 = birkhoff_average(sf, f, p, t);
    const double a2 = birkhoff_average(sf, f, RP{{0.77}, 0.9}, t);
    CHECK(std::abs(a1 - a2) <= 2.0 / std::sqrt(t));
    CHECK(a1 == Catch::Approx(oracle::impulsive_integral(sf.flow(), p, 0.5, impulse, f.eval, t, 1e-3) / t)
                    .margin(1e-4));
    CHECK(std::abs(a1 - rotation_star_average) <= 2.0 / std::sqrt(t));
}

TEST_CASE("empirical measures are nearly invariant", "[ergodic]")
{
    const auto sys = rotation_example();
    const auto sf = Semiflow<RotationSuspension>::impulsive(sys);
    const auto f = rotation_star_potential();
    for (std::size_t n : {10u, 100u, 1000u}) {
        const auto mu = empirical_measure(sf, RP{{0.3}, 0.1}, n);
        CHECK(mu.size() == n);
        CHECK(mu.weight() * static_cast<double>(n) == Catch::Approx(1.0));
        CHECK(mu.pushforward_defect(sf, f) <= 2.0 * 1.5 / static_cast<double>(n) + 1e-12);
        CHECK(mu.atoms[1] == sf.evolve(mu.atoms[0], 1.0));
    }
    const auto mu = empirical_measure(sf, RP{{0.3}, 0.1}, 5);
    const std::string csv = mu.csv();
    CHECK(csv.rfind("index,time,atom,weight\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
    CHECK(mu.integrate(RPot::constant_value(0.4)) == 0.4);
    CHECK_THROWS_AS(empirical_measure(sf, RP{{0.3}, 0.1}, 0), std::domain_error);
}

TEST_CASE("orbit entropy: zero for the rotation, positive for the shift", "[ergodic]")
{
    const auto rsys = rotation_example();
    const auto rsf = Semiflow<RotationSuspension>::impulsive(rsys);
    const VariationalOptions opt;
    const auto rmu = empirical_measure(rsf, RP{{0.2}, 0.1}, opt.atoms, opt.step);
    const auto r = orbit_entropy(rsf.flow(), rmu, opt.n1, opt.n2, opt.epsilons);
    INFO("rotation " << r.value);
    CHECK(r.value <= 0.1);

    const auto ssys = shift_example();
    const auto ssf = Semiflow<ShiftSuspension>::impulsive(ssys);
    Rng rng(4);
    const auto smu = shift_orbit_measure(*ssys, 4, opt.atoms, opt.step);
    CHECK(smu.pushforward_defect(ssf, SPot::of("height", [](const SP& p) { return p.height; })) <= 0.01);
    const auto s = orbit_entropy(ssf.flow(), smu, opt.n1, opt.n2, opt.epsilons);
    const double root = bowen_walters_root(ssys->flow.a() - 2.0, ssys->flow.b() - 2.0);
    INFO("shift " << s.value << " root " << root);
    CHECK(std::abs(s.value - root) <= 0.1);
    // an orbit of one windowed word closes up and shows no entropy
    const auto stuck = empirical_measure(ssf, ssys->sample_restricted(rng), opt.atoms, opt.step);
    CHECK(orbit_entropy(ssf.flow(), stuck, opt.n1, opt.n2, opt.epsilons).value < s.value);
    CHECK_THROWS_AS(orbit_entropy(rsf.flow(), rmu, 5, 8, opt.epsilons), std::domain_error);
}

TEST_CASE("variational check on the rotation example", "[ergodic]")
{
    const auto sys = rotation_example();
    const auto sf = Semiflow<RotationSuspension>::impulsive(sys);
    const auto f = rotation_star_potential();
    const auto est = rotation_pressure(f);
    INFO(est.extrapolation);
    CHECK(std::abs(est.value - rotation_star_average) <= 0.1);

    std::vector<RP> starts;
    Rng rng(8);
    for (int i = 0; i < 4; ++i)
        starts.push_back(sys->sample_restricted(rng));
    VariationalOptions opt;
    opt.atoms = 1000;
    const auto rep = variational_check(sf, f, starts, est, opt);
    INFO(rep.text());
    CHECK(rep.holds());
    CHECK(std::abs(rep.gap()) <= 0.1);

    // constants move both sides by exactly c
    const auto z = variational_check(sf, RPot::zero(), starts, rotation_pressure(RPot::zero()), opt);
    const auto c = variational_check(sf, RPot::constant_value(0.3), starts,
                                     rotation_pressure(RPot::constant_value(0.3)), opt);
    CHECK(c.pressure - z.pressure == Catch::Approx(0.3).margin(1e-9));
    for (std::size_t i = 0; i < starts.size(); ++i)
        CHECK(c.samples[i].value - z.samples[i].value == Catch::Approx(0.3).margin(1e-12));
    CHECK(c.slack == Catch::Approx(z.slack).margin(1e-9));
    const std::string csv = rep.csv();
    CHECK(csv.rfind("start,entropy,integral,value,pressure,slack\n", 0) == 0);
}

TEST_CASE("variational sup side on the shift example approaches the two-ceiling root", "[ergodic]")
{
    const auto sys = shift_example();
    const auto sf = Semiflow<ShiftSuspension>::impulsive(sys);
    const double root = bowen_walters_root(sys->flow.a() - 2.0, sys->flow.b() - 2.0);
    PressureEstimate est; // the value the pressure grid converges to
    est.system = "shift";
    est.value = root;
    const VariationalOptions opt;
    std::vector<EmpiricalMeasure<ShiftSuspension>> ms;
    for (std::uint64_t seed : {1u, 2u, 3u})
        ms.push_back(shift_orbit_measure(*sys, seed, opt.atoms, opt.step));
    const auto rep = variational_check(sf, SPot::zero(), ms, est, opt);
    INFO(rep.text());
    CHECK(rep.holds());
    CHECK(std::abs(rep.gap()) <= 0.1);
    for (const auto& m : rep.samples)
        CHECK(m.integral == 0.0);
}

TEST_CASE("expansiveness witness on the shift example", "[ergodic]")
{
    const auto sys = shift_example();
    const auto sf = Semiflow<ShiftSuspension>::impulsive(sys);
    ExpansivenessOptions opt;
    opt.horizon = 20.0;
    opt.step = 0.02;

    // a short translate is not a counterexample
    Rng rng(2);
    const SP x = sys->sample_restricted(rng);
    const SP y = sf.evolve(x, opt.delta / 2);
    const auto tr = expansiveness_witness(sf, {{x, y}}, opt);
    CHECK(tr.translates == 1);
    CHECK(tr.shadowing == 0);
    CHECK_FALSE(tr.found());

    // words that differ somewhere in the central digits come apart
    const auto pairs = shift_prefix_pairs(*sys, 8, 6, 9);
    REQUIRE(pairs.size() >= 40);
    const auto rep = expansiveness_witness(sf, pairs, opt);
    INFO(rep.text());
    CHECK_FALSE(rep.found());
    CHECK(rep.shadowing == 0);
    CHECK(rep.translates == 0);

    // a difference in the past is forgotten: such pairs do shadow
    SP yp = x;
    yp.base.set(-6, 1 - x.base[-6]);
    CHECK(expansiveness_witness(sf, {{x, yp}}, opt).found());

    // fixed words 0^Z and 1^Z separate at eps = 1/4 before a + b
    const int N = sys->flow.window();
    const SP p0{ShiftPoint::constant(0, N), 0.0}, p1{ShiftPoint::constant(1, N), 0.0};
    double worst = 0.0;
    const double horizon = sys->flow.a() + sys->flow.b();
    for (double t = 0.0; t < horizon; t += 0.01)
        if (sys->D.distance_to(sf.evolve(p0, t)) >= 0.25 && sys->D.distance_to(sf.evolve(p1, t)) >= 0.25)
            worst = std::max(worst, sf.distance(sf.evolve(p0, t), sf.evolve(p1, t)));
    CHECK(worst >= 0.25);
}

TEST_CASE("specification by splicing on the shift example", "[ergodic]")
{
    const auto sys = shift_example();
    const double a = sys->flow.a(), b = sys->flow.b();
    Rng rng(12);

    // one segment: y = x, r = 0
    const SP x0 = sys->sample_restricted(rng);
    const auto one = specification_witness(sys, {{x0, 0.0, a}}, 0.25);
    CHECK(one.feasible);
    CHECK(one.r == std::vector<double>{0.0});
    CHECK(one.worst_distance <= 1e-9);

    // two segments of length a. With a gap of 2 max(a, b) only about five
    // digits are free, and some pairs cannot be joined at eps = 1/4; the
    // report then carries the best eps reached. A gap of 4 max(a, b) always works.
    int joined = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const SP x = sys->sample_restricted(rng), y = sys->sample_restricted(rng);
        const double L = 2.0 * std::max(a, b);
        const auto rep = specification_witness(sys, {{x, 0.0, a}, {y, a + L, 2 * a + L}}, 0.25);
        INFO(rep.text());
        CHECK(rep.gap == Catch::Approx(L));
        REQUIRE(rep.r.size() == 2);
        CHECK(rep.r[0] == 0.0);
        CHECK(rep.smallest_epsilon == std::max(rep.worst_jump, rep.worst_distance));
        CHECK(rep.feasible == (rep.smallest_epsilon < 0.25));
        joined += rep.feasible ? 1 : 0;
    }
    CHECK(joined >= 2);
    const double L = 4.0 * std::max(a, b);
    for (int trial = 0; trial < 5; ++trial) {
        const SP x = sys->sample_restricted(rng), y = sys->sample_restricted(rng);
        const auto rep = specification_witness(sys, {{x, 0.0, a}, {y, a + L, 2 * a + L}}, 0.25);
        INFO(rep.text());
        CHECK(rep.feasible);
        CHECK(rep.worst_jump < 0.25);
        CHECK(rep.worst_distance < 0.25);
    }

    // periodic splice
    ShiftParams prm;
    prm.tail = TailRule::periodic;
    const auto psys = shift_example(prm);
    const SP x = psys->sample_restricted(rng), y = psys->sample_restricted(rng);
    const auto per = specification_witness(psys, {{x, 0.0, a}, {y, a + L, 2 * a + L}}, 0.25, true);
    INFO(per.text());
    CHECK(per.feasible);
    REQUIRE(per.period.has_value());
    CHECK(per.closing_error <= 1e-9);
    CHECK_FALSE(specification_witness(sys, {{x0, 0.0, a}}, 0.25, true).supported);
}
