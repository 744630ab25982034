// acceptance — integration gate for the toolkit. Each criterion prints one
// PASS/FAIL line with the measured numbers; the exit code is the number of
// failed criteria. Run `acceptance --list` for the roster, `--only K` for one.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "fermiprobe/channel.hpp"
#include "fermiprobe/metrology.hpp"
#include "fermiprobe/oracle_suite.hpp"
#include "fermiprobe/protocol.hpp"
#include "fermiprobe/spectrum.hpp"

namespace fp = fermiprobe;
using fp::num::pi;

namespace {

struct Criterion {
    int id;
    std::string title;
    std::function<bool()> run;
};

bool check(const char* what, double measured, double lo, double hi) {
    const bool ok = measured >= lo && measured <= hi;
    std::printf("    %-44s %.6g  (allowed [%.6g, %.6g]) %s\n", what, measured, lo, hi,
                ok ? "ok" : "VIOLATED");
    return ok;
}

std::vector<double> two_res_omega_grid(double flo, double fhi, double fstep, double wide,
                                       double cstep) {
    std::vector<double> g;
    for (double w = -wide; w < flo - 1e-12; w += cstep) g.push_back(w);
    for (double w = flo; w < fhi - 1e-12; w += fstep) g.push_back(w);
    for (double w = fhi; w <= wide + 1e-12; w += cstep) g.push_back(w);
    return g;
}

// --------------------------------------------------------------------------

bool criterion_1() {
    const auto rep = fp::oracle::run_suite(25, 10, 1e-10, 20260808);
    std::printf("    25 randomized bases (<= 6 modes), 10 (T, t) points each\n");
    return check("max |determinant - Fock trace|", rep.max_abs_error, 0.0, 1e-10);
}

bool criterion_2() {
    auto sys = fp::levitov::ExactSystem::prepare(fp::basis::Geometry::box3d(400),
                                                 fp::basis::CouplingSpec(-0.5), 0.01);
    const auto grid = fp::num::uniform_grid(0.0, 52.0, 0.25);
    const auto tr = sys.trace(grid, 0);
    std::vector<double> lx, ly, lm;
    const double alpha = std::pow(std::atan(0.5) / pi, 2.0);
    const double beta = 100.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 5.0 || grid[i] > 50.0) continue;
        lx.push_back(std::log(grid[i]));
        ly.push_back(std::log(tr.magnitude[i]));
        lm.push_back(-alpha * (std::log(beta / pi) + std::log(std::sinh(pi * grid[i] / beta))));
    }
    const double slope = fp::num::least_squares_line(lx, ly).slope;
    const double model_slope = fp::num::least_squares_line(lx, lm).slope;
    const double target = -alpha;
    std::printf("    finite-temperature sinh-model slope on the same window: %.6g\n",
                model_slope);
    std::printf("    (engine vs sinh model: %.2f%% apart; the pi T t coth correction at\n"
                "     T = 0.01 steepens any [5, 50] fit ~15%% beyond the T = 0 exponent)\n",
                100.0 * std::abs(slope - model_slope) / std::abs(model_slope));
    return check("log|v| vs log t slope, t in [5, 50]", slope, target * 1.05, target * 0.95);
}

bool criterion_3() {
    auto sys = fp::levitov::ExactSystem::prepare(fp::basis::Geometry::box3d(400),
                                                 fp::basis::CouplingSpec(-0.1), 0.1);
    const auto grid = fp::num::uniform_grid(0.0, 62.0, 0.25);
    const auto tr = sys.trace(grid, 0);
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid[i] >= 30.0 && grid[i] <= 60.0) { // [3 beta, 6 beta]
            xs.push_back(grid[i]);
            ys.push_back(std::log(tr.magnitude[i]));
        }
    const double rate = -fp::num::least_squares_line(xs, ys).slope;
    const double alpha = (0.1 / pi) * (0.1 / pi);
    const double gamma = pi * alpha * 0.1;
    return check("fitted exponential rate / (pi alpha T)", rate / gamma, 0.9, 1.1);
}

bool criterion_4() {
    fp::channel::ExactChannel ch(fp::basis::Geometry::box3d(400),
                                 fp::basis::CouplingSpec(-0.5), 1e-4, 0);
    const auto grid = fp::num::uniform_grid(0.0, 320.0, 0.5);
    const auto mr = fp::metrology::analyze(ch, 0.1, grid);
    bool ok = check("Q_max (exact channel)", mr.Q_max, 0.40, 0.50);
    ok &= check("t_max / tau_F", mr.t_max, 130.0, 170.0);
    return ok;
}

bool criterion_5() {
    bool ok = true;
    for (const double kfa : {-0.1, -0.5}) {
        auto sys = fp::levitov::ExactSystem::prepare(fp::basis::Geometry::box3d(200),
                                                     fp::basis::CouplingSpec(kfa), 0.2);
        const auto grid = fp::num::uniform_grid(0.0, 200.0, 0.5);
        const auto tr = sys.trace(grid, 0);
        const auto model = fp::weak::make_model(kfa, 0.2);
        double dev = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (grid[i] < 10.0) continue;
            dev = std::max(dev, std::abs(tr.values[i].real() -
                                         fp::weak::approx_value(grid[i], model).real()));
        }
        if (kfa == -0.1)
            ok &= check("max |Re v_exact - Re v_weak| at kFa=-0.1", dev, 0.0, 0.02);
        else
            ok &= check("same metric at kFa=-0.5 (expected > 0.02)", dev, 0.02, 2.0);
    }
    return ok;
}

bool criterion_6() {
    // The asymptotic scaling claim concerns the weak-coupling optimum of
    // Q = t |v| T dw/dT (phase channel). The full-QFI direct search is shown
    // alongside: its F_par purity term lifts Q_max at the strong end of the
    // coupling window and bends that fit away from the pure phase-channel law.
    std::vector<double> la, lt, lq, lt_ds, lq_ds;
    for (const double kfa : {-0.05, -0.1, -0.2, -0.3}) {
        const auto opt = fp::weak::weak_coupling_optimum(0.1, kfa);
        fp::channel::WeakChannel ch(kfa);
        const auto grid =
            fp::num::uniform_grid(0.0, 2.2 * opt.t_max, opt.t_max / 250.0);
        const auto mr = fp::metrology::analyze(ch, 0.1, grid);
        la.push_back(std::log(std::abs(kfa)));
        lt.push_back(std::log(opt.t_max));
        lq.push_back(std::log(opt.Q_max));
        lt_ds.push_back(std::log(mr.t_max));
        lq_ds.push_back(std::log(mr.Q_max));
        std::printf("    kFa=%5.2f: closed form t_max=%9.1f Q_max=%.4f | direct search "
                    "t_max=%9.1f Q_max=%.4f\n",
                    kfa, opt.t_max, opt.Q_max, mr.t_max, mr.Q_max);
    }
    std::printf("    direct-search slopes for reference: t %.3f, Q %.3f\n",
                fp::num::least_squares_line(la, lt_ds).slope,
                fp::num::least_squares_line(la, lq_ds).slope);
    bool ok = check("t_max log-log slope", fp::num::least_squares_line(la, lt).slope, -2.2,
                    -1.8);
    ok &= check("Q_max log-log slope", fp::num::least_squares_line(la, lq).slope, -1.15,
                -0.85);
    return ok;
}

bool criterion_7() {
    bool ok = true;
    for (const double T : {0.05, 0.1, 0.2}) {
        double prev = 1e300;
        for (const double kfa : {-0.5, -1.5, -6.0}) {
            // peak location estimate from the strong-coupling exponent
            const double alpha_s = std::pow(std::atan(std::abs(kfa)) / pi, 2.0);
            const double t_guess = std::max(60.0, 2.6 / (pi * alpha_s * T));
            fp::channel::ExactChannel ch(fp::basis::Geometry::box3d(200),
                                         fp::basis::CouplingSpec(kfa), 1e-4, 0);
            const double stop = std::min(700.0, t_guess);
            const auto grid = fp::num::uniform_grid(0.0, stop, stop / 420.0);
            const auto mr = fp::metrology::analyze(ch, T, grid);
            std::printf("    T=%.2f kFa=%4.1f: Q_max=%.4f (t_max=%.1f)\n", T, kfa, mr.Q_max,
                        mr.t_max);
            if (!(mr.Q_max < prev)) {
                std::printf("    ordering VIOLATED at T=%.2f\n", T);
                ok = false;
            }
            prev = mr.Q_max;
        }
    }
    std::printf("    Q_max(-0.5) > Q_max(-1.5) > Q_max(-6) %s at each temperature\n",
                ok ? "holds" : "fails");
    return ok;
}

bool criterion_8() {
    fp::channel::ExactChannel ch(fp::basis::Geometry::box3d(200),
                                 fp::basis::CouplingSpec(-0.5), 1e-4, 0);
    const auto grid = fp::num::uniform_grid(0.0, 320.0, 0.5);
    const auto mr = fp::metrology::analyze(ch, 0.1, grid);
    std::size_t im = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid[i] <= mr.t_max) im = i;
    const double theta_star = mr.phase[im] + mr.sld_angle_varphi[im];
    const double T0 = 0.1;

    const double dT = 1e-3;
    const auto v0 = ch.value(T0, mr.t_max);
    const auto dv = (ch.value(T0 + dT, mr.t_max) - ch.value(T0 - dT, mr.t_max)) / (2.0 * dT);
    const double FT = fp::metrology::fisher_of_equatorial_measurement(v0, dv, theta_star);
    std::printf("    t_max=%.1f theta*=%.3f F_T(theta*)=%.3f\n", mr.t_max, theta_star, FT);

    const auto tab =
        fp::protocol::LikelihoodTable::build(ch, theta_star, mr.t_max, 0.05, 0.2);
    const int N = 500, R = 200;
    double sq = 0.0;
    for (int r = 0; r < R; ++r) {
        fp::protocol::RamseyConfig cfg;
        cfg.theta = theta_star;
        cfg.shots = N;
        cfg.readout_time = mr.t_max;
        cfg.truth_temperature = T0;
        cfg.rng_seed = 977 + r;
        const auto rec = fp::protocol::simulate(cfg, ch);
        const auto est = fp::protocol::mle_temperature(rec.empirical_mean, N, tab);
        sq += (est.T_est - T0) * (est.T_est - T0);
    }
    const double rms_rel = std::sqrt(sq / R) / T0;
    bool ok = check("RMS relative error (N=500, 200 replicas)", rms_rel, 0.08, 0.12);
    ok &= check("Var(T_est) N F_T", (sq / R) * N * FT, 0.9, 1.2);
    return ok;
}

bool criterion_9() {
    const auto om = two_res_omega_grid(-3.0, 3.0, 0.002, 80.0, 0.02);
    auto sys = fp::levitov::ExactSystem::prepare(fp::basis::Geometry::box3d(200),
                                                 fp::basis::CouplingSpec(-1.5), 0.1);
    const auto tr = sys.trace(fp::num::uniform_grid(0.0, 640.0, 0.25), 0);
    const auto sp = fp::spectrum::absorption_spectrum(tr, 0.005, om);
    bool ok = check("spectrum sum rule (kFa=-1.5, T=0.1)", sp.sum_rule(), 0.999, 1.001);

    double prev = 0.0;
    bool monotone = true;
    for (const double T : {0.01, 0.05, 0.1}) {
        auto s = fp::levitov::ExactSystem::prepare(fp::basis::Geometry::box3d(200),
                                                   fp::basis::CouplingSpec(-1.5), T);
        const auto t2 = s.trace(fp::num::uniform_grid(0.0, 640.0, 0.25), 0);
        const auto p2 = fp::spectrum::absorption_spectrum(t2, 0.02, om);
        const double w = p2.fwhm();
        std::printf("    T=%.2f: peak width (fwhm) = %.5f\n", T, w);
        if (w <= prev) monotone = false;
        prev = w;
    }
    std::printf("    width increases monotonically with T: %s\n", monotone ? "ok" : "VIOLATED");
    return ok && monotone;
}

bool criterion_10() {
    const auto grid = fp::num::uniform_grid(0.0, 1250.0, 2.0);
    auto box = fp::levitov::ExactSystem::prepare(fp::basis::Geometry::box1d(480),
                                                 fp::basis::CouplingSpec(-1.0), 0.1);
    const auto trb = box.trace(grid, 0);
    const auto gh = fp::basis::Geometry::harmonic1d_from_omega(2.5e-3);
    auto harm = fp::levitov::ExactSystem::prepare(gh, fp::basis::CouplingSpec(-1.0), 0.1,
                                                  1e-4, 0, 3072);
    const auto trh = harm.trace(grid, 0);
    double dmag = 0.0, dph = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        dmag = std::max(dmag, std::abs(trb.magnitude[i] - trh.magnitude[i]));
        dph = std::max(dph, std::abs(trb.phase[i] - trh.phase[i]));
    }
    std::printf("    omega0 = %.6g, window omega0 t < pi\n", gh.size_parameter);
    bool ok = check("max | |v|_trap - |v|_box |", dmag, 0.0, 0.05);
    ok &= check("max phase difference (rad)", dph, 0.1, 1e9);
    return ok;
}

bool criterion_11() {
    bool ok = true;
    double worst = 0.0;
    for (const double T : {0.01, 0.0316, 0.1, 0.2, 0.5})
        for (const double kfa : {-0.5, -0.28, -0.12, -0.04, -0.01}) {
            const double mu = fp::weak::continuum_chemical_potential(T);
            const auto w = fp::weak::first_order_shift(T, mu, kfa);
            worst = std::max(worst,
                             std::abs(w.quadrature - w.closed_form) / std::abs(w.closed_form));
        }
    ok &= check("dual-route shift disagreement on the 5x5 grid", worst, 0.0, 1e-6);

    const double w0 = fp::weak::fumi_shift(-6.0);
    for (const double T : {0.05, 0.1, 0.2}) {
        auto sys = fp::levitov::ExactSystem::prepare(fp::basis::Geometry::box3d(200),
                                                     fp::basis::CouplingSpec(-6.0), T);
        const auto tr = sys.trace(fp::num::uniform_grid(0.0, 45.0, 0.5), 0);
        const double w = (tr.phase[81] - tr.phase[79]) / 1.0; // d phi / dt at t = 40
        char label[64];
        std::snprintf(label, sizeof label, "|w(T=%.2f) - w_Fumi| / |w_Fumi|", T);
        ok &= check(label, std::abs(w - w0) / std::abs(w0), 0.0, 0.02);
    }
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<Criterion> criteria = {
        {1, "oracle equivalence of determinant and Fock trace", criterion_1},
        {2, "orthogonality-catastrophe power law", criterion_2},
        {3, "thermal exponential decay rate", criterion_3},
        {4, "headline sensitivity Q_max, t_max at kFa=-0.5, T=0.1", criterion_4},
        {5, "weak-coupling approximation fidelity window", criterion_5},
        {6, "weak-coupling scaling laws in the coupling", criterion_6},
        {7, "Q_max ordering across couplings", criterion_7},
        {8, "Ramsey estimator end to end at the optimum", criterion_8},
        {9, "absorption spectrum sum rule and thermal widths", criterion_9},
        {10, "1D homogeneous vs harmonically trapped parity", criterion_10},
        {11, "dual-route collisional shift and the Fumi limit", criterion_11},
    };

    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--only") && i + 1 < argc) only = std::atoi(argv[++i]);
        if (!std::strcmp(argv[i], "--list")) {
            for (const auto& c : criteria)
                std::printf("%2d  %s\n", c.id, c.title.c_str());
            return 0;
        }
    }

    int failed = 0;
    for (const auto& c : criteria) {
        if (only != 0 && c.id != only) continue;
        std::printf("criterion %d: %s\n", c.id, c.title.c_str());
        const auto t0 = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = c.run();
        } catch (const std::exception& e) {
            std::printf("    exception: %s\n", e.what());
        }
        const double secs = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - t0)
                                .count();
        std::printf("[%s] criterion %d (%.1f s)\n", ok ? "PASS" : "FAIL", c.id, secs);
        if (!ok) ++failed;
    }
    return failed;
}
