#include "gradnoise/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace gradnoise {
namespace {

// Stafford's mix13 finalizer (splitmix64 quality avalanche).
inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

} // namespace

std::uint64_t counter_hash(const TrajectorySeed& seed, std::uint64_t step, std::uint64_t mode) {
    std::uint64_t h = mix64(seed.master_seed + kGolden);
    h = mix64(h ^ (seed.trajectory_index + kGolden));
    h = mix64(h ^ (step + kGolden));
    h = mix64(h ^ (mode + kGolden));
    return h;
}

double inverse_normal_cdf(double p) {
    // PPND16 (Wichura, Applied Statistics AS 241).
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("inverse_normal_cdf: p must be in (0,1)");
    }
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r + 6.7265770927008700853e4) * r +
                 4.5921953931549871457e4) * r + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
              1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        const double den =
            (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r + 3.9307895800092710610e4) * r +
                 2.1213794301586595867e4) * r + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
              4.2313330701600911252e1) * r + 1.0);
        return q * num / den;
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double z;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
                 1.27045825245236838258e0) * r + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        const double den =
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
                 1.48103976427480074590e-1) * r + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
        z = num / den;
    } else {
        r -= 5.0;
        const double num =
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
                 2.65321895265761230930e-2) * r + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        const double den =
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-4) * r +
                 7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
        z = num / den;
    }
    return q < 0.0 ? -z : z;
}

double normal_draw(const TrajectorySeed& seed, std::uint64_t step, std::uint64_t mode) {
    const std::uint64_t h = counter_hash(seed, step, mode);
    // 53-bit mantissa, offset into the open interval (0,1).
    const double u = (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
    return inverse_normal_cdf(u);
}

std::vector<double> noise_increment(const TrajectorySeed& seed, std::uint64_t step, double dt, int count) {
    std::vector<double> out(static_cast<std::size_t>(count));
    noise_increment(seed, step, dt, count, out.data());
    return out;
}

void noise_increment(const TrajectorySeed& seed, std::uint64_t step, double dt, int count, double* out) {
    if (dt <= 0.0) throw std::domain_error("noise_increment: dt must be positive");
    const double sd = std::sqrt(dt);
    for (int mode = 0; mode < count; ++mode) {
        out[mode] = sd * normal_draw(seed, step, static_cast<std::uint64_t>(mode));
    }
}

} // namespace gradnoise
