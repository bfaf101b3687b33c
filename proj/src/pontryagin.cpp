#include "nds/pontryagin.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "nds/spectrum.hpp"

namespace nds {

namespace {

constexpr double kZeroTol = 1e-12;
constexpr double kGapTol = 1e-9;
constexpr double kClearance = 1e-6;
constexpr int kCertifyK[] = {4, 8};

// i^m as (re, im)
cplx i_power(int m) {
    switch (m % 4) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
    }
}

double bisect(const std::function<double(double)>& f, double a, double b, double fa) {
    while (b - a > kZeroTol) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0) return m;
        if ((fm < 0.0) == (fa < 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

QuasiPolynomial::QuasiPolynomial(std::vector<QpTerm> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw Error(ErrorKind::InvalidInput, "pontryagin", "quasipolynomial needs at least one term");
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (terms_[i].m < 0 || terms_[i].n < 0) {
            throw Error(ErrorKind::InvalidInput, "pontryagin", "term exponents must be >= 0");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (terms_[i].m == terms_[j].m && terms_[i].n == terms_[j].n) {
                throw Error(ErrorKind::InvalidInput, "pontryagin", "duplicate term (" + std::to_string(terms_[i].m) +
                                                                       "," + std::to_string(terms_[i].n) + ")");
            }
        }
    }
}

cplx QuasiPolynomial::operator()(cplx z) const {
    cplx acc = 0.0;
    for (const auto& t : terms_) acc += t.a * std::pow(z, t.m) * std::exp(static_cast<double>(t.n) * z);
    return acc;
}

bool QuasiPolynomial::real_coefficients() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const QpTerm& t) { return t.a.imag() == 0.0; });
}

QuasiPolynomial QuasiPolynomial::parse(const std::string& text) {
    std::vector<QpTerm> terms;
    std::stringstream all(text);
    std::string chunk;
    while (std::getline(all, chunk, ';')) {
        chunk.erase(std::remove_if(chunk.begin(), chunk.end(), ::isspace), chunk.end());
        if (chunk.empty()) continue;
        std::vector<double> nums;
        std::stringstream cs(chunk);
        std::string field;
        while (std::getline(cs, field, ',')) {
            try {
                std::size_t used = 0;
                nums.push_back(std::stod(field, &used));
                if (used != field.size()) throw std::invalid_argument(field);
            } catch (const std::exception&) {
                throw Error(ErrorKind::Parse, "pontryagin", "bad number '" + field + "' in term '" + chunk + "'");
            }
        }
        if (nums.size() != 3 && nums.size() != 4) {
            throw Error(ErrorKind::Parse, "pontryagin", "term '" + chunk + "' must be m,n,a or m,n,re,im");
        }
        if (nums[0] != std::floor(nums[0]) || nums[1] != std::floor(nums[1])) {
            throw Error(ErrorKind::Parse, "pontryagin", "term exponents must be integers in '" + chunk + "'");
        }
        terms.push_back({static_cast<int>(nums[0]), static_cast<int>(nums[1]),
                         cplx(nums[2], nums.size() == 4 ? nums[3] : 0.0)});
    }
    return QuasiPolynomial(std::move(terms));
}

TrigPolynomial::TrigPolynomial(std::vector<TrigTerm> terms) : terms_(std::move(terms)) {}

double TrigPolynomial::operator()(double y) const {
    double acc = 0.0;
    for (const auto& t : terms_) {
        const double qy = t.q * y;
        acc += std::pow(y, t.p) * (t.cos_coef * std::cos(qy) + t.sin_coef * std::sin(qy));
    }
    return acc;
}

cplx TrigPolynomial::operator()(cplx y) const {
    cplx acc = 0.0;
    for (const auto& t : terms_) {
        const cplx qy = static_cast<double>(t.q) * y;
        acc += std::pow(y, t.p) * (t.cos_coef * std::cos(qy) + t.sin_coef * std::sin(qy));
    }
    return acc;
}

double TrigPolynomial::derivative(double y) const {
    double acc = 0.0;
    for (const auto& t : terms_) {
        const double qy = t.q * y;
        const double c = std::cos(qy), s = std::sin(qy);
        const double trig = t.cos_coef * c + t.sin_coef * s;
        const double dtrig = t.q * (-t.cos_coef * s + t.sin_coef * c);
        const double lead = t.p > 0 ? t.p * std::pow(y, t.p - 1) * trig : 0.0;
        acc += lead + std::pow(y, t.p) * dtrig;
    }
    return acc;
}

double TrigPolynomial::magnitude(double y) const {
    double acc = 0.0;
    for (const auto& t : terms_) acc += std::pow(std::abs(y), t.p) * (std::abs(t.cos_coef) + std::abs(t.sin_coef));
    return acc;
}

int TrigPolynomial::max_frequency() const {
    int q = 0;
    for (const auto& t : terms_) q = std::max(q, std::abs(t.q));
    return q;
}

std::optional<std::pair<int, int>> principal_term(const QuasiPolynomial& qp) {
    for (const auto& cand : qp.terms()) {
        if (cand.a == 0.0) continue;
        const bool dominates = std::all_of(qp.terms().begin(), qp.terms().end(), [&](const QpTerm& t) {
            return t.a == 0.0 || (cand.m >= t.m && cand.n >= t.n);
        });
        if (dominates) return std::make_pair(cand.m, cand.n);
    }
    return std::nullopt;
}

std::pair<TrigPolynomial, TrigPolynomial> split_fg(const QuasiPolynomial& qp) {
    if (!qp.real_coefficients()) {
        throw Error(ErrorKind::ComplexCoefficients, "pontryagin", "split_fg needs real coefficients");
    }
    // a (iy)^m (cos ny + i sin ny) = a y^m i^m (cos + i sin)
    std::map<std::pair<int, int>, std::pair<double, double>> f_acc, g_acc;
    for (const auto& t : qp.terms()) {
        const double a = t.a.real();
        const cplx w = i_power(t.m) * a;  // multiplies (cos + i sin)
        auto& f = f_acc[{t.m, t.n}];
        auto& g = g_acc[{t.m, t.n}];
        f.first += w.real();
        f.second -= w.imag();
        g.first += w.imag();
        g.second += w.real();
    }
    auto build = [](const std::map<std::pair<int, int>, std::pair<double, double>>& acc) {
        std::vector<TrigTerm> terms;
        for (const auto& [key, c] : acc) {
            const double sin_coef = key.second == 0 ? 0.0 : c.second;
            if (c.first == 0.0 && sin_coef == 0.0) continue;
            terms.push_back({key.first, key.second, c.first, sin_coef});
        }
        return TrigPolynomial(std::move(terms));
    };
    return {build(f_acc), build(g_acc)};
}

ZeroSet real_zeros(const TrigPolynomial& tp, double lo, double hi) {
    if (!(lo < hi) || hi - lo > 1e4) {
        throw Error(ErrorKind::InvalidInput, "pontryagin", "need lo < hi and hi - lo <= 1e4");
    }
    ZeroSet out;
    const int q = tp.max_frequency();
    const double step = q > 0 ? std::min(0.01, kPi / (8.0 * q)) : 0.01;
    const int count = static_cast<int>(std::ceil((hi - lo) / step));
    const double h = (hi - lo) / count;
    auto f = [&](double y) { return tp(y); };
    auto df = [&](double y) { return tp.derivative(y); };

    double y0 = lo, f0 = f(lo), d0 = df(lo);
    if (f0 == 0.0) out.zeros.push_back(lo);
    for (int i = 1; i <= count; ++i) {
        const double y1 = (i == count) ? hi : lo + i * h;
        const double f1 = f(y1), d1 = df(y1);
        if (f1 == 0.0) {
            out.zeros.push_back(y1);
            if (std::abs(d1) <= 1e-9 * std::max(1.0, tp.magnitude(y1))) out.multiple.push_back(y1);
        } else if (f0 != 0.0 && (f0 < 0.0) != (f1 < 0.0)) {
            out.zeros.push_back(bisect(f, y0, y1, f0));
        } else if (f0 != 0.0 && d0 != 0.0 && (d0 < 0.0) != (d1 < 0.0)) {
            // |f| has an interior extremum without a sign change: a touching zero?
            const double ym = bisect(df, y0, y1, d0);
            if (std::abs(f(ym)) <= 1e-9 * std::max(1.0, tp.magnitude(ym))) {
                out.zeros.push_back(ym);
                out.multiple.push_back(ym);
            }
        }
        y0 = y1;
        f0 = f1;
        d0 = d1;
    }
    std::sort(out.zeros.begin(), out.zeros.end());
    return out;
}

CountResult count_check(const TrigPolynomial& tp, int r, int s, int k, double eps) {
    if (k < 2) throw Error(ErrorKind::InvalidInput, "pontryagin", "count_check needs k >= 2");
    const auto zs = real_zeros(tp, -2.0 * kPi * k + eps, 2.0 * kPi * k + eps);
    CountResult res;
    res.count = static_cast<int>(zs.zeros.size());
    res.expected = 4 * k * s + r;
    res.inconclusive = zs.flagged();
    res.pass = !res.inconclusive && res.count == res.expected;
    return res;
}

bool alternation_check(const TrigPolynomial& f, const TrigPolynomial& g, double lo, double hi) {
    const auto zf = real_zeros(f, lo, hi);
    const auto zg = real_zeros(g, lo, hi);
    if (zf.flagged() || zg.flagged()) return false;
    std::vector<std::pair<double, int>> merged;
    for (double z : zf.zeros) merged.emplace_back(z, 0);
    for (double z : zg.zeros) merged.emplace_back(z, 1);
    std::sort(merged.begin(), merged.end());
    for (std::size_t i = 1; i < merged.size(); ++i) {
        if (merged[i].second == merged[i - 1].second) return false;
        if (merged[i].first - merged[i - 1].first <= kGapTol) return false;
    }
    return true;
}

const char* to_string(LhpVerdict v) {
    switch (v) {
        case LhpVerdict::Certified: return "Certified";
        case LhpVerdict::Refuted: return "Refuted";
        case LhpVerdict::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

LhpCertificate lhp_certificate(const QuasiPolynomial& qp) {
    LhpCertificate cert;
    const auto pt = principal_term(qp);
    if (!pt || !qp.real_coefficients()) {
        cert.reason = pt ? "ComplexCoefficients" : "NoPrincipalTerm";
        // Fallback: count zeros of H in a right half-plane rectangle.
        const double re0 = 1e-6, re1 = 5.0, ext = 16.0 * kPi + 1.0;
        try {
            const auto w = contour::rectangle([&](cplx z) { return qp(z); }, re0, re1, -ext, ext);
            if (w.count > 0) {
                cert.verdict = LhpVerdict::Refuted;
                cert.witness = std::to_string(w.count) + " zero(s) in [" + fmt(re0) + "," + fmt(re1) + "]x[" +
                               fmt(-ext) + "," + fmt(ext) + "]";
            } else {
                cert.witness = "no zeros in the fallback rectangle";
            }
        } catch (const Error& e) {
            cert.witness = e.what();
        }
        return cert;
    }
    const int r = pt->first;
    const int s = pt->second;
    const auto [f, g] = split_fg(qp);

    // Largest eps in (0, pi/2) keeping every F zero away from all window ends.
    const int kmax = kCertifyK[1];
    const auto wide = real_zeros(f, -2.0 * kPi * kmax, 2.0 * kPi * kmax + 0.5 * kPi);
    double eps = -1.0;
    for (int j = 0; j < 256 && eps < 0.0; ++j) {
        const double e = 0.5 * kPi * (1.0 - (j + 0.5) / 256.0);
        bool clear = true;
        for (int k : kCertifyK) {
            for (double z : wide.zeros) {
                if (std::abs(z - (-2.0 * kPi * k + e)) < kClearance || std::abs(z - (2.0 * kPi * k + e)) < kClearance) {
                    clear = false;
                }
            }
        }
        if (clear) eps = e;
    }
    if (eps < 0.0) {
        cert.reason = "NoClearEpsilon";
        return cert;
    }
    cert.epsilon = eps;
    cert.k_window = kmax;
    for (int k : kCertifyK) {
        const auto cc = count_check(f, r, s, k, eps);
        if (cc.inconclusive) {
            cert.reason = "MultipleRoot";
            cert.witness = "k=" + std::to_string(k);
            return cert;
        }
        if (!cc.pass) {
            cert.verdict = LhpVerdict::Refuted;
            cert.reason = "CountMismatch";
            cert.witness = "k=" + std::to_string(k) + " count=" + std::to_string(cc.count) +
                           " expected=" + std::to_string(cc.expected);
            return cert;
        }
    }
    const double lo = -2.0 * kPi * kmax + eps;
    const double hi = 2.0 * kPi * kmax + eps;
    cert.zeros = real_zeros(f, lo, hi).zeros;
    for (double y0 : cert.zeros) {
        const double v = -g(y0) * f.derivative(y0);
        cert.sign_values.push_back(v);
        if (!(v > 0.0)) {
            cert.verdict = LhpVerdict::Refuted;
            cert.reason = "SignViolation";
            cert.witness = "y0=" + fmt(y0) + " G*F'=" + fmt(-v);
            return cert;
        }
    }
    // Non-real zeros of F near the axis would show up as extra winding.
    try {
        const auto w = contour::rectangle([&](cplx y) { return f(y); }, lo, hi, -0.5, 0.5);
        if (w.count != static_cast<int>(cert.zeros.size())) {
            cert.verdict = LhpVerdict::Refuted;
            cert.reason = "NonRealZero";
            cert.witness = "strip winding " + std::to_string(w.count) + " vs " +
                           std::to_string(cert.zeros.size()) + " real zeros";
            return cert;
        }
    } catch (const Error& e) {
        cert.reason = "StripWindingFailed";
        cert.witness = e.what();
        return cert;
    }
    cert.verdict = LhpVerdict::Certified;
    cert.reason = "FiniteWindowEvidence";
    const double min_sign = *std::min_element(cert.sign_values.begin(), cert.sign_values.end());
    cert.witness = "k=" + std::to_string(kmax) + " eps=" + fmt(eps) + " zeros=" + std::to_string(cert.zeros.size()) +
                   " min(-G*F')=" + fmt(min_sign);
    return cert;
}

}  // namespace nds
