#include "nds/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <mutex>
#include <ostream>

#include <Eigen/LU>

#include "nds/linalg.hpp"
#include "nds/parallel.hpp"

namespace nds {

namespace {

constexpr int kBaseSamples = 512;
constexpr int kMaxSamples = 1 << 16;
constexpr double kTooCloseRatio = 1e-10;
constexpr double kResidualRatio = 1e-9;

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

contour::Winding trace_closed(const contour::Func& f, const std::function<cplx(double)>& path, int base) {
    contour::Winding w;
    w.min_abs = std::numeric_limits<double>::infinity();
    w.max_abs = 0.0;
    int budget = kMaxSamples;
    bool unresolved = false;

    auto eval = [&](double t) {
        const cplx v = f(path(t));
        if (!finite(v)) throw Error(ErrorKind::ContourTooClose, "spectrum", "non-finite value on contour");
        const double a = std::abs(v);
        w.min_abs = std::min(w.min_abs, a);
        w.max_abs = std::max(w.max_abs, a);
        ++w.samples;
        --budget;
        return v;
    };

    std::function<double(double, cplx, double, cplx)> segment = [&](double t0, cplx f0, double t1, cplx f1) {
        const double d = std::arg(f1 / f0);
        if (std::abs(d) < 0.5 * kPi) return d;
        if (budget <= 0) {
            unresolved = true;
            return d;
        }
        const double tm = 0.5 * (t0 + t1);
        const cplx fm = eval(tm);
        if (fm == 0.0) return d;
        return segment(t0, f0, tm, fm) + segment(tm, fm, t1, f1);
    };

    std::vector<cplx> vals(static_cast<std::size_t>(base) + 1);
    for (int i = 0; i < base; ++i) vals[static_cast<std::size_t>(i)] = eval(static_cast<double>(i) / base);
    vals[static_cast<std::size_t>(base)] = vals[0];
    if (w.min_abs < kTooCloseRatio * w.max_abs || w.min_abs == 0.0) {
        throw Error(ErrorKind::ContourTooClose, "spectrum", "root too close to contour");
    }
    double total = 0.0;
    for (int i = 0; i < base; ++i) {
        total += segment(static_cast<double>(i) / base, vals[static_cast<std::size_t>(i)],
                         static_cast<double>(i + 1) / base, vals[static_cast<std::size_t>(i) + 1]);
    }
    if (w.min_abs < kTooCloseRatio * w.max_abs || w.min_abs == 0.0) {
        throw Error(ErrorKind::ContourTooClose, "spectrum", "root too close to contour");
    }
    if (unresolved) {
        throw Error(ErrorKind::ContourTooClose, "spectrum", "phase not resolved within the sample cap");
    }
    const double turns = total / (2.0 * kPi);
    w.count = static_cast<int>(std::lround(turns));
    if (std::abs(turns - w.count) > 0.25) {
        throw Error(ErrorKind::ContourTooClose, "spectrum", "non-integral winding");
    }
    return w;
}

cplx newton_quotient(const NeutralSystem& sys, cplx lambda) {
    const CMatrix d = char_matrix(sys, lambda);
    const CMatrix dp = char_matrix_derivative(sys, lambda);
    cplx tr;
    if (d.rows() == 1) {
        tr = dp(0, 0) / d(0, 0);
    } else {
        Eigen::PartialPivLU<CMatrix> lu(d);
        tr = lu.solve(dp).trace();
    }
    if (!finite(tr) || tr == 0.0) return 0.0;
    return 1.0 / tr;  // det / det'
}

struct NewtonOutcome {
    cplx lambda;
    bool converged = false;
};

// Secant iteration on u = det/det'. u has a simple zero at every root whatever
// its multiplicity, so convergence stays superlinear at multiple roots.
NewtonOutcome secant_on_quotient(const NeutralSystem& sys, cplx start, int max_iter = 60) {
    cplx l0 = start;
    cplx u0 = newton_quotient(sys, l0);
    if (u0 == 0.0) return {l0, true};
    cplx l1 = l0 - u0;
    const double reach = std::max(10.0, 2.0 * std::abs(start));
    for (int it = 0; it < max_iter; ++it) {
        const cplx u1 = newton_quotient(sys, l1);
        if (u1 == 0.0) return {l1, true};
        if (u1 == u0) return {l1, std::abs(l1 - l0) <= 1e-13 * std::max(1.0, std::abs(l1))};
        const cplx l2 = l1 - u1 * (l1 - l0) / (u1 - u0);
        if (!finite(l2) || std::abs(l2 - start) > reach) return {l1, false};
        const double step = std::abs(l2 - l1);
        l0 = l1;
        u0 = u1;
        l1 = l2;
        if (step <= 1e-14 * std::max(1.0, std::abs(l2))) return {l2, true};
    }
    return {l1, false};
}

// True when no root appears to lie within about one sample spacing of the
// segment [z0, z1]. Near a root of multiplicity m, |det/det'| ~ distance / m, and
// a double root on a straight contour leaves no phase jump, so the argument
// principle alone cannot detect it.
bool segment_clear(const NeutralSystem& sys, cplx z0, cplx z1) {
    const double len = std::abs(z1 - z0);
    const double spacing = std::min(0.05, len / 64.0);
    const int pieces = std::max(1, static_cast<int>(std::ceil(len / spacing)));
    const double n = static_cast<double>(sys.n());
    for (int i = 0; i <= pieces; ++i) {
        const cplx z = z0 + (z1 - z0) * (static_cast<double>(i) / pieces);
        if (n * std::abs(newton_quotient(sys, z)) < spacing) return false;
    }
    return true;
}

bool rectangle_clear(const NeutralSystem& sys, double re0, double re1, double im0, double im1) {
    return segment_clear(sys, cplx(re0, im0), cplx(re1, im0)) && segment_clear(sys, cplx(re1, im0), cplx(re1, im1)) &&
           segment_clear(sys, cplx(re1, im1), cplx(re0, im1)) && segment_clear(sys, cplx(re0, im1), cplx(re0, im0));
}

contour::Func det_func(const NeutralSystem& sys) {
    return [&sys](cplx z) { return char_det(sys, z); };
}

std::optional<RootRecord> certify(const NeutralSystem& sys, cplx lambda) {
    RootRecord rec;
    rec.lambda = lambda;
    rec.residual = std::abs(char_det(sys, lambda));
    bool have_mult = false;
    for (double r : {kMultiplicityRadius, 2.0 * kMultiplicityRadius, 0.5 * kMultiplicityRadius}) {
        try {
            const auto w = contour::circle(det_func(sys), lambda, r);
            rec.alg_mult = w.count;
            rec.scale = w.max_abs;
            have_mult = true;
            break;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::ContourTooClose) throw;
        }
    }
    if (!have_mult || rec.alg_mult < 1) return std::nullopt;
    if (!(rec.residual < kResidualRatio * rec.scale)) return std::nullopt;
    const auto ker = kernel_basis(char_matrix(sys, lambda), 1e-8, char_matrix_scale(sys, lambda));
    rec.geo_mult = std::clamp(static_cast<int>(ker.size()), 1, rec.alg_mult);
    return rec;
}

struct Square {
    cplx center;
    double half;
};

int square_winding(const NeutralSystem& sys, const Square& s) {
    if (!rectangle_clear(sys, s.center.real() - s.half, s.center.real() + s.half, s.center.imag() - s.half,
                         s.center.imag() + s.half)) {
        throw Error(ErrorKind::ContourTooClose, "spectrum", "root close to square boundary");
    }
    return contour::rectangle(det_func(sys), s.center.real() - s.half, s.center.real() + s.half,
                              s.center.imag() - s.half, s.center.imag() + s.half)
        .count;
}

// Winding of a square, nudging it by a tiny offset if a root sits on the boundary.
std::optional<std::pair<Square, int>> robust_square(const NeutralSystem& sys, Square s) {
    static const double nudges[] = {0.0, 0.0137, -0.0291, 0.0413};
    for (double nu : nudges) {
        Square t{s.center + cplx(nu, 0.5 * nu) * s.half, s.half};
        try {
            return std::make_pair(t, square_winding(sys, t));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::ContourTooClose) throw;
        }
    }
    return std::nullopt;
}

RootRecord quadrisection(const NeutralSystem& sys, cplx seed) {
    Square box{seed, 0.25};
    int w = 0;
    for (int grow = 0; grow <= 4; ++grow) {
        auto got = robust_square(sys, box);
        if (got && got->second > 0) {
            box = got->first;
            w = got->second;
            break;
        }
        box.half *= 2.0;
    }
    if (w == 0) throw Error(ErrorKind::NoConvergence, "spectrum", "no root found near seed");
    for (int depth = 0; depth < 40; ++depth) {
        const auto trial = secant_on_quotient(sys, box.center);
        if (trial.converged && std::abs(trial.lambda.real() - box.center.real()) <= box.half &&
            std::abs(trial.lambda.imag() - box.center.imag()) <= box.half) {
            if (auto rec = certify(sys, trial.lambda)) return *rec;
        }
        bool moved = false;
        const double h = 0.5 * box.half;
        for (cplx off : {cplx(-h, -h), cplx(h, -h), cplx(-h, h), cplx(h, h)}) {
            auto got = robust_square(sys, Square{box.center + off, h});
            if (got && got->second > 0) {
                box = got->first;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    throw Error(ErrorKind::NoConvergence, "spectrum", "quadrisection depth exhausted");
}

struct Rect {
    double re0, re1, im0, im1;
    int w;
};

int rect_winding(const NeutralSystem& sys, double re0, double re1, double im0, double im1) {
    return contour::rectangle(det_func(sys), re0, re1, im0, im1).count;
}

// Split the longer side; retries with shifted cut positions when a root sits on
// the cut or the children fail to add up to the parent count.
std::pair<Rect, Rect> split(const NeutralSystem& sys, const Rect& r) {
    static const double cuts[] = {0.5, 0.5 + 0.0173, 0.5 - 0.0311, 0.5 + 0.0627, 0.5 - 0.0919, 0.5 + 0.131};
    const bool vertical = (r.re1 - r.re0) >= (r.im1 - r.im0);
    for (double c : cuts) {
        Rect a = r, b = r;
        if (vertical) {
            const double x = r.re0 + c * (r.re1 - r.re0);
            a.re1 = x;
            b.re0 = x;
            if (!segment_clear(sys, cplx(x, r.im0), cplx(x, r.im1))) continue;
        } else {
            const double y = r.im0 + c * (r.im1 - r.im0);
            a.im1 = y;
            b.im0 = y;
            if (!segment_clear(sys, cplx(r.re0, y), cplx(r.re1, y))) continue;
        }
        try {
            a.w = rect_winding(sys, a.re0, a.re1, a.im0, a.im1);
            b.w = rect_winding(sys, b.re0, b.re1, b.im0, b.im1);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::ContourTooClose) throw;
            continue;
        }
        if (a.w + b.w == r.w && a.w >= 0 && b.w >= 0) return {a, b};
    }
    throw Error(ErrorKind::ContourTooClose, "spectrum", "could not split rectangle cleanly");
}

bool inside(const Rect& r, cplx z) {
    return z.real() > r.re0 && z.real() < r.re1 && z.imag() > r.im0 && z.imag() < r.im1;
}

void sort_roots(std::vector<RootRecord>& roots) {
    std::sort(roots.begin(), roots.end(), [](const RootRecord& a, const RootRecord& b) {
        if (a.lambda.real() != b.lambda.real()) return a.lambda.real() < b.lambda.real();
        return a.lambda.imag() < b.lambda.imag();
    });
}

}  // namespace

// ---------------------------------------------------------------------------

void SpectralWindow::validate() const {
    if (!(re_min < re_max) || !(im_min < im_max)) {
        throw Error(ErrorKind::InvalidInput, "spectrum", "window must satisfy re_min < re_max and im_min < im_max");
    }
    if ((re_max - re_min) * (im_max - im_min) > 1e4) {
        throw Error(ErrorKind::InvalidInput, "spectrum", "window area exceeds 1e4");
    }
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw Error(ErrorKind::InvalidInput, "spectrum", "epsilon must lie in (0, 1)");
    }
    if (k_max < 0) throw Error(ErrorKind::InvalidInput, "spectrum", "k_max must be >= 0");
}

int SpectralWindow::effective_k_max() const {
    if (k_max > 0) return k_max;
    const double reach = std::max(std::abs(im_min), std::abs(im_max));
    return static_cast<int>(std::ceil(reach / (2.0 * kPi))) + 1;
}

std::vector<Seed> asymptotic_seeds(const NeutralSystem& sys, int k_max) {
    if (k_max < 1) throw Error(ErrorKind::InvalidInput, "spectrum", "k_max must be >= 1");
    const CMatrix& a = sys.a_minus1();
    const double anorm = std::max(1.0, a.norm());
    const auto clusters = eigen_structure(a, 1e-6 * anorm, 1e-8 * anorm);
    std::vector<Seed> seeds;
    int m = 0;
    for (const auto& c : clusters) {
        if (std::abs(c.mu) <= 1e-12 * anorm) continue;
        ++m;
        const double re = std::log(std::abs(c.mu));
        const double arg = std::arg(c.mu);
        for (int k = -k_max; k <= k_max; ++k) {
            seeds.push_back({m, k, c.mu, cplx(re, arg + 2.0 * kPi * k)});
        }
    }
    return seeds;
}

namespace contour {

Winding circle(const Func& f, cplx center, double radius) {
    if (!(radius > 0.0)) throw Error(ErrorKind::InvalidInput, "spectrum", "radius must be positive");
    return trace_closed(
        f, [&](double t) { return center + radius * std::exp(cplx(0.0, 2.0 * kPi * t)); }, kBaseSamples);
}

Winding rectangle(const Func& f, double re0, double re1, double im0, double im1) {
    if (!(re0 < re1) || !(im0 < im1)) {
        throw Error(ErrorKind::InvalidInput, "spectrum", "degenerate rectangle");
    }
    const double w = re1 - re0;
    const double h = im1 - im0;
    const double perim = 2.0 * (w + h);
    auto path = [=](double t) {
        double s = t * perim;
        if (s < w) return cplx(re0 + s, im0);
        s -= w;
        if (s < h) return cplx(re1, im0 + s);
        s -= h;
        if (s < w) return cplx(re1 - s, im1);
        s -= w;
        return cplx(re0, im1 - s);
    };
    const int base = std::max(kBaseSamples, static_cast<int>(std::min(8.0 * perim, 32768.0)));
    return trace_closed(f, path, base);
}

}  // namespace contour

int winding_number(const NeutralSystem& sys, cplx center, double radius) {
    return contour::circle(det_func(sys), center, radius).count;
}

int winding_number_rect(const NeutralSystem& sys, double re0, double re1, double im0, double im1) {
    return rect_winding(sys, re0, re1, im0, im1);
}

RootRecord refine_root(const NeutralSystem& sys, cplx seed) {
    const auto trial = secant_on_quotient(sys, seed);
    if (trial.converged) {
        if (auto rec = certify(sys, trial.lambda)) return *rec;
    }
    return quadrisection(sys, seed);
}

std::vector<RootRecord> locate_window_roots(const NeutralSystem& sys, const SpectralWindow& window) {
    window.validate();
    const double span = std::max(window.re_max - window.re_min, window.im_max - window.im_min);
    Rect top{window.re_min, window.re_max, window.im_min, window.im_max, 0};
    bool ok = false;
    for (int attempt = 0; attempt <= 5 && !ok; ++attempt) {
        const double pad = attempt == 0 ? 0.0 : 1e-4 * span * attempt * (1.0 + 0.37 * attempt);
        Rect t{window.re_min - pad, window.re_max + pad, window.im_min - 0.61 * pad, window.im_max + 0.83 * pad, 0};
        try {
            if (!rectangle_clear(sys, t.re0, t.re1, t.im0, t.im1)) {
                throw Error(ErrorKind::ContourTooClose, "spectrum", "root close to window boundary");
            }
            t.w = rect_winding(sys, t.re0, t.re1, t.im0, t.im1);
            top = t;
            ok = true;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::ContourTooClose || attempt == 5) throw;
        }
    }

    std::vector<RootRecord> found;
    std::mutex found_mutex;
    std::vector<Rect> level;
    if (top.w > 0) level.push_back(top);
    while (!level.empty()) {
        std::vector<std::vector<Rect>> children(level.size());
        parallel_for(level.size(), [&](std::size_t i) {
            const Rect& r = level[i];
            const cplx centre(0.5 * (r.re0 + r.re1), 0.5 * (r.im0 + r.im1));
            const auto trial = secant_on_quotient(sys, centre);
            if (trial.converged && inside(r, trial.lambda)) {
                if (auto rec = certify(sys, trial.lambda); rec && rec->alg_mult == r.w) {
                    std::lock_guard<std::mutex> lock(found_mutex);
                    found.push_back(*rec);
                    return;
                }
            }
            if (std::max(r.re1 - r.re0, r.im1 - r.im0) < 1e-9) {
                throw Error(ErrorKind::NoConvergence, "spectrum", "subdivision reached the resolution floor");
            }
            auto [a, b] = split(sys, r);
            if (a.w > 0) children[i].push_back(a);
            if (b.w > 0) children[i].push_back(b);
        });
        std::vector<Rect> next;
        for (auto& c : children) next.insert(next.end(), c.begin(), c.end());
        level = std::move(next);
    }

    std::vector<RootRecord> roots;
    for (auto& r : found) {
        const cplx z = r.lambda;
        if (z.real() >= window.re_min && z.real() <= window.re_max && z.imag() >= window.im_min &&
            z.imag() <= window.im_max) {
            roots.push_back(r);
        }
    }
    attach_lattice_tags(sys, roots, window.effective_k_max());
    sort_roots(roots);
    return roots;
}

void attach_lattice_tags(const NeutralSystem& sys, std::vector<RootRecord>& roots, int k_max) {
    if (k_max < 1) return;
    const auto seeds = asymptotic_seeds(sys, k_max);
    if (seeds.empty()) return;
    double sep = 2.0 * kPi;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        for (std::size_t j = i + 1; j < seeds.size(); ++j) {
            sep = std::min(sep, std::abs(seeds[i].lambda - seeds[j].lambda));
        }
    }
    const double radius = sep / 3.0;
    for (auto& r : roots) {
        r.lattice.reset();
        double best = radius;
        for (const auto& s : seeds) {
            const double d = std::abs(r.lambda - s.lambda);
            if (d < best) {
                best = d;
                r.lattice = LatticeTag{s.m, s.k, s.mu, s.lambda};
            }
        }
    }
}

bool in_sigma1(const RootRecord& r) {
    return r.lattice && std::abs(std::abs(r.lattice->mu) - 1.0) < kUnitCircleTol;
}

const char* partition_label(const RootRecord& r, double epsilon) {
    const double re = r.lambda.real();
    if (re <= -epsilon) return "L0";
    if (re >= epsilon) return "L2";
    // On-axis roots and untagged strip roots are treated as unstable-side.
    if (std::abs(re) < kUnitCircleTol || re > 0.0 || !in_sigma1(r)) return "L2";
    return "L1";
}

Partition spectral_partition(const std::vector<RootRecord>& roots, double epsilon) {
    if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidInput, "spectrum", "epsilon must be positive");
    Partition p;
    for (const auto& r : roots) {
        const std::string label = partition_label(r, epsilon);
        if (label == "L0") {
            p.l0.push_back(r);
        } else if (label == "L1") {
            p.l1.push_back(r);
        } else {
            p.l2.push_back(r);
        }
    }
    return p;
}

std::vector<LatticeRoot> lattice_roots(const NeutralSystem& sys, int k_min, int k_max) {
    std::vector<Seed> seeds;
    for (const auto& s : asymptotic_seeds(sys, std::max({1, k_max, -k_min}))) {
        if (s.k >= k_min && s.k <= k_max) seeds.push_back(s);
    }
    std::vector<LatticeRoot> out(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t i) {
        RootRecord r = refine_root(sys, seeds[i].lambda);
        r.lattice = LatticeTag{seeds[i].m, seeds[i].k, seeds[i].mu, seeds[i].lambda};
        out[i] = LatticeRoot{seeds[i], r, std::abs(r.lambda - seeds[i].lambda)};
    });
    return out;
}

// Radii below this are measurement noise around an exact seed.
constexpr double kRadiusSlack = 1e-12;

RadiiReport radii_summability_check(const NeutralSystem& sys, int k_max, double cauchy_tol) {
    RadiiReport rep;
    if (k_max < 2) {
        rep.flag = "InsufficientData";
        return rep;
    }
    const auto roots = lattice_roots(sys, 0, k_max);
    if (roots.empty()) throw Error(ErrorKind::InvalidInput, "spectrum", "A_{-1} has no nonzero eigenvalues");
    rep.radii.assign(static_cast<std::size_t>(k_max) + 1, 0.0);
    for (const auto& lr : roots) {
        auto& slot = rep.radii[static_cast<std::size_t>(lr.seed.k)];
        slot = std::max(slot, lr.radius);
    }
    rep.decreasing = true;
    for (int k = k_max / 2; k < k_max; ++k) {
        if (rep.radii[static_cast<std::size_t>(k) + 1] > rep.radii[static_cast<std::size_t>(k)] + kRadiusSlack) rep.decreasing = false;
    }
    // Partial sums S_j for j in the final quarter; the spread is S_kmax - S_{j0}.
    const int j0 = (3 * k_max) / 4;
    double tail = 0.0;
    for (int k = j0 + 1; k <= k_max; ++k) tail += rep.radii[static_cast<std::size_t>(k)] * rep.radii[static_cast<std::size_t>(k)];
    rep.tail_spread = tail;
    rep.cauchy = tail < cauchy_tol;
    rep.summable_evidence = rep.decreasing && rep.cauchy;
    return rep;
}

void write_roots_csv(std::ostream& os, const std::vector<RootRecord>& roots, double epsilon) {
    os << "m,k,re,im,residual,alg_mult,geo_mult,partition\n";
    os.precision(12);
    for (const auto& r : roots) {
        if (r.lattice) {
            os << r.lattice->m << ',' << r.lattice->k << ',';
        } else {
            os << ",,";
        }
        os << r.lambda.real() << ',' << r.lambda.imag() << ',' << r.residual << ',' << r.alg_mult << ','
           << r.geo_mult << ',' << partition_label(r, epsilon) << '\n';
    }
}

}  // namespace nds
