#include "tinyzone/tinymath.hpp"

#include <bit>
#include <cstdint>

#include "tinyzone/error.hpp"

// Implementation notes: every function works in double precision from bit-level
// seeds plus short polynomial/Newton refinement, so no <cmath> include and no
// libm symbol ever appears in this translation unit.

namespace tinyzone {

namespace {

constexpr double kLn2Hi = 6.93147180369123816490e-01;   // ln 2, split for exact reduction
constexpr double kLn2Lo = 1.90821492927058770002e-10;
constexpr double kInvLn2 = 1.44269504088896338700e+00;  // 1 / ln 2
constexpr double kTwoPiHi = 6.28318530717958623200e+00; // 2*pi split
constexpr double kTwoPiLo = 2.44929359829470635445e-16;
constexpr double kPi = 3.14159265358979311600e+00;
constexpr double kHalfPi = 1.57079632679489655800e+00;

double abs_d(double x) {
    return std::bit_cast<double>(std::bit_cast<std::uint64_t>(x) & 0x7fffffffffffffffULL);
}

// 2^k for k in [-1022, 1023], built directly from the exponent field.
double pow2i(int k) {
    return std::bit_cast<double>(static_cast<std::uint64_t>(k + 1023) << 52);
}

bool is_nan(double x) { return x != x; }

} // namespace

double t_sqrt(double x) {
    if (is_nan(x) || x < 0.0) throw MathDomainError("t_sqrt", x);
    if (x == 0.0) return 0.0;

    // Halve the exponent for the initial estimate, then Newton iterations.
    std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    std::uint64_t approx = (bits >> 1) + 0x1ff7a3bea91d9b1bULL;
    double y = std::bit_cast<double>(approx);
    for (int i = 0; i < 5; ++i) y = 0.5 * (y + x / y);
    return y;
}

double t_exp(double x) {
    if (is_nan(x) || abs_d(x) > 700.0) throw MathDomainError("t_exp", x);
    if (x == 0.0) return 1.0;

    // x = k*ln2 + r with |r| <= ln2/2, exp(r) by Taylor, then scale by 2^k.
    double kd = t_floor(x * kInvLn2 + 0.5);
    int k = static_cast<int>(kd);
    double r = (x - kd * kLn2Hi) - kd * kLn2Lo;

    double term = r;
    double sum = 1.0 + r;
    for (int n = 2; n <= 12; ++n) {
        term *= r / n;
        sum += term;
    }
    return sum * pow2i(k);
}

double t_log(double x) {
    if (is_nan(x) || x <= 0.0) throw MathDomainError("t_log", x);

    std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    int e = 0;
    if (bits < (1ULL << 52)) {  // subnormal: renormalize first
        x *= 18014398509481984.0;  // 2^54
        e -= 54;
        bits = std::bit_cast<std::uint64_t>(x);
    }
    e += static_cast<int>((bits >> 52) & 0x7ff) - 1023;
    // Mantissa m in [1, 2); shift to [sqrt(1/2), sqrt(2)) for a small series argument.
    double m = std::bit_cast<double>((bits & 0x000fffffffffffffULL) | 0x3ff0000000000000ULL);
    if (m > 1.4142135623730951) {
        m *= 0.5;
        e += 1;
    }

    // ln m = 2 * atanh(u), u = (m-1)/(m+1), |u| < 0.1716
    double u = (m - 1.0) / (m + 1.0);
    double u2 = u * u;
    double s = 0.0;
    for (int n = 13; n >= 1; n -= 2) s = s * u2 + 1.0 / n;
    double ln_m = 2.0 * u * s;
    return ln_m + e * kLn2Hi + e * kLn2Lo;
}

double t_sin(double x) {
    if (is_nan(x) || abs_d(x) > 1.0e4) throw MathDomainError("t_sin", x);
    if (x < 0.0) return -t_sin(-x);  // keeps odd symmetry exact
    if (x == 0.0) return 0.0;

    // Reduce to [-pi, pi] with a split 2*pi, then fold into [-pi/2, pi/2].
    double kd = t_floor(x / kTwoPiHi + 0.5);
    double r = (x - kd * kTwoPiHi) - kd * kTwoPiLo;
    if (r > kHalfPi) r = kPi - r;
    else if (r < -kHalfPi) r = -kPi - r;

    double r2 = r * r;
    double term = r;
    double sum = r;
    for (int n = 1; n <= 7; ++n) {
        term *= -r2 / ((2.0 * n) * (2.0 * n + 1.0));
        sum += term;
    }
    return sum;
}

double t_floor(double x) {
    if (is_nan(x)) throw MathDomainError("t_floor", x);
    if (abs_d(x) >= 4503599627370496.0) return x;  // >= 2^52: already integral
    double t = static_cast<double>(static_cast<long long>(x));
    return (t > x) ? t - 1.0 : t;
}

double t_pow(double x, double y) {
    if (x == 0.0) {
        if (y > 0.0) return 0.0;
        if (y == 0.0) return 1.0;
        throw MathDomainError("t_pow", x);
    }
    if (x < 0.0) throw MathDomainError("t_pow", x);
    return t_exp(y * t_log(x));
}

} // namespace tinyzone
