#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "nds/acceptance.hpp"
#include "nds/classify.hpp"
#include "nds/eigen.hpp"
#include "nds/parallel.hpp"
#include "nds/pontryagin.hpp"
#include "nds/sim.hpp"
#include "nds/stabilize.hpp"
#include "nds/system_io.hpp"
#include "nds/version.hpp"

namespace fs = std::filesystem;
using namespace nds;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitVerdict = 2;

struct RunConfig {
    std::string command;
    std::string system_path;
    SpectralWindow window;
    int grid_m = kDefaultGrid;
    double t_end = 60.0;
    double t_split = 0.0;
    std::string history = "builtin:trig";
    std::string terms;
    std::string out_dir;
    std::string fixtures_dir;
    double margin = 0.5;
    double m_cut = kDefaultMCut;
    std::uint64_t seed = 1;
    int jobs = 0;
};

std::string config_echo(const RunConfig& c) {
    std::ostringstream os;
    os << "# nds " << kToolVersion << " command=" << c.command << " seed=" << c.seed;
    if (!c.system_path.empty()) os << " system=" << c.system_path;
    if (c.command == "spectrum" || c.command == "classify" || c.command == "stabilize") {
        os << " window=[" << c.window.re_min << "," << c.window.re_max << "]x[" << c.window.im_min << ","
           << c.window.im_max << "] epsilon=" << c.window.epsilon << " k_max=" << c.window.k_max;
    }
    if (c.command == "simulate") {
        os << " M=" << c.grid_m << " T=" << c.t_end << " t_split=" << c.t_split << " history=" << c.history;
    }
    if (c.command == "stabilize") os << " margin=" << c.margin << " m_cut=" << c.m_cut;
    if (c.command == "pontryagin") os << " terms=\"" << c.terms << "\"";
    return os.str();
}

// Writes to <out>/<name> when an output directory is set, otherwise to stdout.
class Sink {
public:
    Sink(const RunConfig& cfg, const std::string& name) {
        if (cfg.out_dir.empty()) return;
        fs::create_directories(cfg.out_dir);
        const auto path = fs::path(cfg.out_dir) / name;
        file_ = std::make_unique<std::ofstream>(path);
        if (!*file_) throw Error(ErrorKind::InvalidInput, "cli", "cannot write " + path.string());
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

int cmd_spectrum(const RunConfig& cfg) {
    const auto sys = load_system(cfg.system_path);
    auto roots = locate_window_roots(sys, cfg.window);
    Sink sink(cfg, "roots.csv");
    sink.stream() << config_echo(cfg) << '\n';
    write_roots_csv(sink.stream(), roots, cfg.window.epsilon);
    double absc = -INFINITY;
    for (const auto& r : roots) absc = std::max(absc, r.lambda.real());
    std::cout << "roots " << roots.size() << " spectral abscissa (window) " << std::setprecision(10) << absc << '\n';
    return kExitOk;
}

int cmd_classify(const RunConfig& cfg) {
    const auto sys = load_system(cfg.system_path);
    const auto rep = classify_system(sys, cfg.window);
    Sink sink(cfg, "report.txt");
    auto& os = sink.stream();
    os << config_echo(cfg) << '\n';
    os << std::setprecision(10);
    for (const auto& c : rep.structure) {
        os << "A_{-1} eigenvalue " << c.mu << " alg " << c.alg_mult << " geo " << c.geo_mult
           << (std::abs(std::abs(c.mu) - 1.0) < kUnitCircleTol ? " (sigma1)" : "") << '\n';
    }
    os << "necessary condition " << to_string(rep.necessary) << '\n';
    os << "roots in window " << rep.roots.size() << ", spectral abscissa " << rep.spectral_abscissa_window << '\n';
    if (!rep.branch.empty()) os << "branch " << rep.branch << '\n';
    for (const auto& n : rep.notes) os << "note " << n << '\n';
    if (!cfg.out_dir.empty()) {
        Sink roots(cfg, "roots.csv");
        roots.stream() << config_echo(cfg) << '\n';
        write_roots_csv(roots.stream(), rep.roots, cfg.window.epsilon);
    }
    std::cout << rep.verdict_line() << '\n';
    return rep.verdict == Verdict::Unstable ? kExitVerdict : kExitOk;
}

int cmd_simulate(const RunConfig& cfg) {
    const auto sys = load_system(cfg.system_path);
    History hist;
    if (cfg.history.rfind("builtin:", 0) == 0) {
        hist = builtin_history(cfg.history.substr(8), sys, cfg.grid_m);
    } else {
        hist = load_history(cfg.history, sys.n(), cfg.grid_m);
    }
    const auto traj = simulate(sys, hist, cfg.t_end, cfg.grid_m);
    if (traj.compatibility_warning) {
        std::cerr << "warning: history is not compatible with the equation at t = 0 (jump " << traj.start_jump << ")\n";
    }
    Sink sink(cfg, "trajectory.csv");
    sink.stream() << config_echo(cfg) << '\n';
    write_trajectory_csv(sink.stream(), traj);
    const double t_split = cfg.t_split > 0.0 ? cfg.t_split : cfg.t_end / 3.0;
    const auto g = growth_verdict(m2_norm_trace(traj), t_split);
    std::cout << to_string(g.verdict) << " (linear slope " << std::setprecision(6) << g.linear_slope << ", R2 "
              << g.linear_r2 << ", log slope " << g.log_slope << ")\n";
    return g.verdict == Growth::Growing ? kExitVerdict : kExitOk;
}

int cmd_pontryagin(const RunConfig& cfg) {
    const auto qp = QuasiPolynomial::parse(cfg.terms);
    const auto cert = lhp_certificate(qp);
    Sink sink(cfg, "pontryagin.txt");
    auto& os = sink.stream();
    os << config_echo(cfg) << '\n';
    os << "reason " << cert.reason << "\nwitness " << cert.witness << '\n';
    os << std::setprecision(12);
    for (std::size_t i = 0; i < cert.zeros.size(); ++i) {
        os << "zero " << cert.zeros[i];
        if (i < cert.sign_values.size()) os << " -G*F' " << cert.sign_values[i];
        os << '\n';
    }
    switch (cert.verdict) {
        case LhpVerdict::Certified:
            std::cout << "Certified LHP (window k=" << cert.k_window << ")\n";
            return kExitOk;
        case LhpVerdict::Refuted:
            std::cout << "Refuted (" << cert.reason << ")\n";
            return kExitVerdict;
        case LhpVerdict::Inconclusive:
            std::cout << "Inconclusive (" << cert.reason << ")\n";
            return kExitOk;
    }
    return kExitOk;
}

int cmd_stabilize(const RunConfig& cfg) {
    const auto sys = load_system(cfg.system_path);
    StabilizeOptions opts;
    opts.margin = cfg.margin;
    opts.m_cut = cfg.m_cut;
    opts.seed = cfg.seed;
    const auto rep = stabilizability_report(sys, cfg.window, opts);
    {
        Sink sink(cfg, "stabilize.txt");
        sink.stream() << config_echo(cfg) << '\n';
        write_report(sink.stream(), rep);
    }
    if (rep.finite_gain && !cfg.out_dir.empty()) {
        Sink gain(cfg, "gain.csv");
        gain.stream() << config_echo(cfg) << '\n';
        write_gain_csv(gain.stream(), rep.finite_gain->gain);
    }
    std::cout << (rep.pass ? "Stabilizable" : "NotStabilizable") << " (conditions 1-4 "
              << (rep.pass ? "pass" : "fail") << ")\n";
    return rep.pass ? kExitOk : kExitVerdict;
}

int cmd_selftest(const RunConfig& cfg) {
    Sink sink(cfg, "selftest.txt");
    auto& os = sink.stream();
    os << config_echo(cfg) << '\n';
    bool ok = true;
    if (!cfg.fixtures_dir.empty()) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(cfg.fixtures_dir)) {
            if (e.path().extension() == ".sys") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            try {
                load_system(f.string());
                os << "PASS parse " << f.filename().string() << '\n';
            } catch (const Error& e) {
                ok = false;
                os << "FAIL parse " << f.filename().string() << ": " << e.what() << '\n';
            }
        }
    }
    const auto results = run_acceptance();
    print_acceptance(os, results);
    for (const auto& r : results) ok = ok && r.pass;
    return ok ? kExitOk : kExitVerdict;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral analysis, stability classification and simulation of neutral delay systems"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);
    app.fallthrough();
    RunConfig cfg;
    app.add_option("--jobs", cfg.jobs, "Worker threads (0: hardware concurrency)")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", cfg.seed, "Seed for randomized searches");
    app.add_option("--out", cfg.out_dir, "Directory for CSV and report artifacts (default: stdout)");

    auto add_window = [&cfg](CLI::App* sub) {
        sub->add_option("--re-min", cfg.window.re_min, "Window left edge");
        sub->add_option("--re-max", cfg.window.re_max, "Window right edge");
        sub->add_option("--im-min", cfg.window.im_min, "Window bottom edge");
        sub->add_option("--im-max", cfg.window.im_max, "Window top edge");
        sub->add_option("--epsilon", cfg.window.epsilon, "Strip half-width around the imaginary axis");
        sub->add_option("--k-max", cfg.window.k_max, "Lattice range (0: from the window)");
    };
    cfg.window.im_min = -40.0 * kPi;
    cfg.window.im_max = 40.0 * kPi;

    auto* spectrum = app.add_subcommand("spectrum", "Locate roots of det Delta in the window");
    spectrum->add_option("system", cfg.system_path, "System file")->required();
    add_window(spectrum);

    auto* classify = app.add_subcommand("classify", "Stability trichotomy on the evidence window");
    classify->add_option("system", cfg.system_path, "System file")->required();
    add_window(classify);

    auto* simulate_cmd = app.add_subcommand("simulate", "Method-of-steps simulation with norm trace");
    simulate_cmd->add_option("system", cfg.system_path, "System file")->required();
    simulate_cmd->add_option("--T", cfg.t_end, "Final time")->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--M", cfg.grid_m, "Grid points per unit delay")->check(CLI::Range(kMinGrid, 1 << 16));
    simulate_cmd->add_option("--history", cfg.history, "builtin:trig|exp|rootvec or a history CSV");
    simulate_cmd->add_option("--t-split", cfg.t_split, "Start of the growth fit (default T/3)");

    auto* pontryagin = app.add_subcommand("pontryagin", "Left half-plane certificate for a quasi-polynomial");
    pontryagin->add_option("--terms", cfg.terms, "Terms \"m,n,a; ...\" for a z^m e^{nz}")->required();

    auto* stabilize = app.add_subcommand("stabilize", "Regular stabilizability conditions and targets");
    stabilize->add_option("system", cfg.system_path, "System file")->required();
    stabilize->add_option("--margin", cfg.margin, "Target shift as a fraction of the root radius");
    stabilize->add_option("--m-cut", cfg.m_cut, "|Im| beyond which lattice roots use condition 4");
    add_window(stabilize);

    auto* selftest = app.add_subcommand("selftest", "Run the acceptance suite");
    selftest->add_option("--fixtures", cfg.fixtures_dir, "Also parse every .sys file in this directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }
    cfg.command = app.get_subcommands().front()->get_name();
    if (cfg.jobs > 0) set_default_jobs(cfg.jobs);

    try {
        if (cfg.command == "spectrum") return cmd_spectrum(cfg);
        if (cfg.command == "classify") return cmd_classify(cfg);
        if (cfg.command == "simulate") return cmd_simulate(cfg);
        if (cfg.command == "pontryagin") return cmd_pontryagin(cfg);
        if (cfg.command == "stabilize") return cmd_stabilize(cfg);
        if (cfg.command == "selftest") return cmd_selftest(cfg);
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.kind()) << "] " << e.what() << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
