#ifndef ISF_EXAMPLES_HPP
#define ISF_EXAMPLES_HPP

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "impulsive.hpp"

namespace isf {

// Rotation suspension with impulses: D at height 1/2, I(z, 1/2) = (z + theta2, 3/4).

struct RotationParams {
    double theta1 = std::numbers::sqrt2 - 1.0;
    double theta2 = std::numbers::sqrt3 - 1.0;
    double xi = 0.125;
};

using RotationSystem = ImpulsiveSystem<RotationSuspension>;

inline std::shared_ptr<const RotationSystem> rotation_example(const RotationParams& prm = {})
{
    using Point = RotationSuspension::point_type;
    if (!(prm.theta2 > 0.0 && prm.theta2 < 1.0))
        throw std::domain_error("rotation_example: theta2 must lie in (0, 1)");
    if (!(prm.xi > 0.0 && prm.xi < 0.25))
        throw std::domain_error("rotation_example: xi must lie in (0, 1/4)");

    auto sys = std::make_shared<RotationSystem>();
    sys->name = "rotation";
    sys->flow = RotationSuspension(prm.theta1);
    sys->D = level_set(sys->flow, 0.5, "D");
    sys->image = level_set(sys->flow, 0.75, "I(D)");
    const double theta2 = prm.theta2;
    sys->I.apply = [theta2](const Point& p) {
        return Point{{wrap_unit(p.base.angle + theta2)}, 0.75};
    };
    sys->I.preimages = [theta2](const Point& q) -> std::vector<Point> {
        if (std::abs(q.height - 0.75) > time_tolerance)
            return {};
        return {Point{{wrap_unit(q.base.angle - theta2)}, 0.5}};
    };
    sys->I.lip_bound = 1.0;
    sys->I.max_preimages = 1;
    sys->eta = 0.75;
    sys->xi = prm.xi;
    sys->xi0 = 0.25;
    sys->restricted = [](const Point& p) { return p.height < 0.5 || p.height >= 0.75; };
    sys->sample_restricted = [](Rng& rng) {
        const double u = rng.uniform() * 0.75;
        return Point{{rng.uniform()}, u < 0.5 ? u : u + 0.25};
    };
    // one angle per lift (a + k theta1, h - k) used by the metric
    const double theta1 = prm.theta1;
    sys->breakpoints = [theta1](const Point& p) {
        std::vector<Point> out;
        for (int k = -1; k <= 1; ++k) {
            const double z = wrap_unit(p.base.angle + k * theta1);
            out.push_back(Point{{z}, 0.5});
            out.push_back(Point{{z}, 0.75});
        }
        return out;
    };
    return sys;
}

/// Same flow and D, but I(z, 1/2) = (2z, 3/4). Lip(I) = 2 breaks C1.
inline std::shared_ptr<const RotationSystem> doubling_rotation_double(const RotationParams& prm = {})
{
    using Point = RotationSuspension::point_type;
    auto base = rotation_example(prm);
    auto sys = std::make_shared<RotationSystem>(*base);
    sys->name = "rotation-doubling";
    sys->I.apply = [](const Point& p) { return Point{{wrap_unit(2.0 * p.base.angle)}, 0.75}; };
    sys->I.preimages = [](const Point& q) -> std::vector<Point> {
        if (std::abs(q.height - 0.75) > time_tolerance)
            return {};
        return {Point{{0.5 * q.base.angle}, 0.5}, Point{{0.5 * q.base.angle + 0.5}, 0.5}};
    };
    sys->I.lip_bound = 2.0;
    sys->I.max_preimages = 2;
    return sys;
}

/// Conjugacy of psi on Omega \ D with the suspension of R_{theta1+theta2}
/// under the constant ceiling 3/4. The lower band is kept, the upper band
/// is rotated back by theta2 and lowered by 1/4.
class RotationConjugacy {
public:
    explicit RotationConjugacy(const RotationParams& prm = {})
        : theta2_(prm.theta2), target_(wrap_unit(prm.theta1 + prm.theta2), 0.75)
    {
    }

    const RotationSuspension& target() const noexcept { return target_; }

    RotationSuspension::point_type operator()(const RotationSuspension::point_type& p) const
    {
        if (p.height < 0.5)
            return p;
        if (p.height < 0.75)
            throw std::domain_error("RotationConjugacy: point outside Omega \\ D");
        return {{wrap_unit(p.base.angle - theta2_)}, p.height - 0.25};
    }

private:
    double theta2_;
    RotationSuspension target_;
};

// Shift suspension with impulses: D at height 1, I(x, 1) = (R x, 3), R the digit flip.

struct ShiftParams {
    double a = std::numbers::pi;
    double b = 2.0 + std::numbers::sqrt2;
    int window = 32;
    TailRule tail = TailRule::zero_fill;
    double xi = 1.0;
};

using ShiftSystem = ImpulsiveSystem<ShiftSuspension>;

inline std::shared_ptr<const ShiftSystem> shift_example(const ShiftParams& prm = {})
{
    using Point = ShiftSuspension::point_type;
    if (!(prm.a > 3.0) || !(prm.b > 3.0))
        throw std::domain_error("shift_example: ceilings a and b must exceed 3");
    if (!(prm.xi > 0.0 && prm.xi < 2.0))
        throw std::domain_error("shift_example: xi must lie in (0, 2)");

    auto sys = std::make_shared<ShiftSystem>();
    sys->name = "shift";
    // D and I(D) both sit in the lower metric band, where the flip is an isometry
    sys->flow = ShiftSuspension(prm.a, prm.b, prm.window, prm.tail, 3.0);
    sys->D = level_set(sys->flow, 1.0, "D");
    sys->image = level_set(sys->flow, 3.0, "I(D)");
    sys->I.apply = [](const Point& p) { return Point{p.base.flipped(), 3.0}; };
    sys->I.preimages = [](const Point& q) -> std::vector<Point> {
        if (std::abs(q.height - 3.0) > time_tolerance)
            return {};
        return {Point{q.base.flipped(), 1.0}};
    };
    sys->I.lip_bound = 1.0;
    sys->I.max_preimages = 1;
    // after an impulse the orbit climbs c - 3 to the roof and 1 more to D
    sys->eta = std::min(prm.a, prm.b) - 2.0;
    sys->xi = prm.xi;
    sys->xi0 = 2.0;
    sys->restricted = [](const Point& p) { return p.height < 1.0 || p.height >= 3.0; };
    const ShiftSuspension flow = sys->flow;
    sys->sample_restricted = [flow](Rng& rng) {
        const ShiftPoint x = ShiftPoint::random(rng, flow.window(), flow.tail());
        const double span = flow.ceiling(x) - 2.0;
        const double u = rng.uniform() * span;
        return Point{x, u < 1.0 ? u : u + 2.0};
    };
    // the digit blocks read x and sigma x. Mixed words can win when both
    // ends sit in the upper band, so there this is only a candidate list.
    sys->breakpoints = [](const Point& p) {
        const ShiftPoint s = p.base.shifted();
        return std::vector<Point>{{p.base, 1.0}, {p.base, 3.0}, {s, 1.0}, {s, 3.0}};
    };
    return sys;
}

/// Parity recoding G(x)_n = x_n xor (|n| mod 2). It satisfies
/// G o sigma o R = sigma o G.
inline ShiftPoint parity_recode(const ShiftPoint& x)
{
    ShiftPoint y = x;
    for (int n = 1; n <= x.window(); n += 2) {
        y.set(n, 1 - x[n]);
        y.set(-n, 1 - x[-n]);
    }
    return y;
}

/// Conjugacy of psi on Omega \ D with a suspension of the plain shift.
///
/// Between impulses the lower-band base advances by sigma o R, so dropping
/// the upper band by 2 alone gives a suspension over sigma o R; the parity
/// recoding turns that into sigma. The target ceiling is b - 2 on [x_0 = 0]
/// and a - 2 on [x_0 = 1].
class ShiftConjugacy {
public:
    explicit ShiftConjugacy(const ShiftParams& prm = {})
        : target_(prm.b - 2.0, prm.a - 2.0, prm.window, prm.tail)
    {
    }

    const ShiftSuspension& target() const noexcept { return target_; }

    ShiftSuspension::point_type operator()(const ShiftSuspension::point_type& p) const
    {
        if (p.height < 1.0)
            return {parity_recode(p.base), p.height};
        if (p.height < 3.0)
            throw std::domain_error("ShiftConjugacy: point outside Omega \\ D");
        return {parity_recode(p.base.flipped()), p.height - 2.0};
    }

private:
    ShiftSuspension target_;
};

} // namespace isf

#endif
