// protocol.hpp — Ramsey interferometry Monte Carlo: binary readout records,
// maximum-likelihood temperature estimation and Cramer-Rao benchmarking.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "fermiprobe/channel.hpp"
#include "fermiprobe/errors.hpp"
#include "fermiprobe/metrology.hpp"

namespace fermiprobe::protocol {

using std::complex;

struct RamseyConfig {
    double theta = 0.0;          // second-pulse phase
    int shots = 1;               // N
    double readout_time = 0.0;   // t / tau_F
    double truth_temperature = 0.0;
    std::uint64_t rng_seed = 0;
};

struct RamseyRecord {
    std::vector<int> outcomes; // +-1
    RamseyConfig config;
    double empirical_mean = 0.0;
};

// p_+ = (1 + cos(theta) Re v + sin(theta) Im v) / 2
inline double outcome_probability(complex<double> v, double theta) {
    if (std::abs(v) > 1.0 + 1e-9)
        throw Error("outcome_probability: |v| must not exceed 1");
    double p = 0.5 * (1.0 + std::cos(theta) * v.real() + std::sin(theta) * v.imag());
    if (p < -1e-12 || p > 1.0 + 1e-12)
        throw Error("outcome_probability: probability out of range");
    return std::min(1.0, std::max(0.0, p));
}

namespace detail {

// uniform double in [0, 1) with an implementation-independent mapping
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace detail

inline RamseyRecord simulate(const RamseyConfig& config, channel::Channel& ch) {
    if (config.shots < 1) throw Error("simulate: shots >= 1 required");
    if (config.readout_time < 0.0) throw Error("simulate: readout_time >= 0 required");
    const complex<double> v = ch.value(config.truth_temperature, config.readout_time);
    const double p = outcome_probability(v, config.theta);
    RamseyRecord rec;
    rec.config = config;
    rec.outcomes.resize(config.shots);
    std::mt19937_64 rng(config.rng_seed);
    long sum = 0;
    for (int i = 0; i < config.shots; ++i) {
        const int o = detail::uniform01(rng) < p ? 1 : -1;
        rec.outcomes[i] = o;
        sum += o;
    }
    rec.empirical_mean = static_cast<double>(sum) / config.shots;
    return rec;
}

struct EstimationResult {
    double T_est = 0.0;
    std::vector<std::pair<double, double>> log_likelihood_curve;
    double stderr_estimate = 0.0;
    int n_shots = 0;
};

// Tabulated outcome model p(T) on a temperature grid, shared by all replicas
// of a benchmark (the channel is only queried once per grid node).
struct LikelihoodTable {
    std::vector<double> temperatures;
    std::vector<double> p_plus;

    static LikelihoodTable build(channel::Channel& ch, double theta, double t,
                                 double T_lo, double T_hi, int nodes = 201) {
        if (!(T_hi > T_lo) || nodes < 8) throw Error("LikelihoodTable: bad bracket");
        LikelihoodTable tab;
        tab.temperatures.resize(nodes);
        tab.p_plus.resize(nodes);
        for (int i = 0; i < nodes; ++i) {
            const double T = T_lo + (T_hi - T_lo) * i / (nodes - 1.0);
            tab.temperatures[i] = T;
            tab.p_plus[i] = outcome_probability(ch.value(T, t), theta);
        }
        return tab;
    }

    // Catmull-Rom interpolation, clamped to (tiny, 1 - tiny)
    double p_at(double T) const {
        const int n = static_cast<int>(temperatures.size());
        const double lo = temperatures.front(), hi = temperatures.back();
        const double h = (hi - lo) / (n - 1);
        double s = (T - lo) / h;
        int i = static_cast<int>(std::floor(s));
        i = std::max(0, std::min(n - 2, i));
        const double u = s - i;
        const double p0 = p_plus[std::max(0, i - 1)];
        const double p1 = p_plus[i];
        const double p2 = p_plus[i + 1];
        const double p3 = p_plus[std::min(n - 1, i + 2)];
        const double a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
        const double b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
        const double c = -0.5 * p0 + 0.5 * p2;
        const double p = ((a * u + b) * u + c) * u + p1;
        return std::min(1.0 - 1e-12, std::max(1e-12, p));
    }
};

// MLE by dense scan plus golden-section refinement of the in-bracket maximum;
// stderr from the observed information (curvature at the maximum).
inline EstimationResult mle_temperature(double empirical_mean, int n_shots,
                                        const LikelihoodTable& table) {
    if (n_shots < 1) throw Error("mle_temperature: n_shots >= 1 required");
    const double n_plus = 0.5 * (1.0 + empirical_mean) * n_shots;
    const double n_minus = n_shots - n_plus;
    auto loglik = [&](double T) {
        const double p = table.p_at(T);
        return n_plus * std::log(p) + n_minus * std::log(1.0 - p);
    };

    EstimationResult res;
    res.n_shots = n_shots;
    const int n = static_cast<int>(table.temperatures.size());
    res.log_likelihood_curve.reserve(n);
    int best = 0;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double T = table.temperatures[i];
        const double ll = loglik(T);
        res.log_likelihood_curve.emplace_back(T, ll);
        if (ll > best_ll) {
            best_ll = ll;
            best = i;
        }
    }
    if (best == 0 || best == n - 1)
        throw BoundaryMaximum("mle_temperature: likelihood maximum at the bracket edge");

    double a = table.temperatures[std::max(0, best - 2)];
    double b = table.temperatures[std::min(n - 1, best + 2)];
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = loglik(x1), f2 = loglik(x2);
    for (int it = 0; it < 120 && (b - a) > 1e-12; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = loglik(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = loglik(x1);
        }
    }
    res.T_est = 0.5 * (a + b);

    const double h = (table.temperatures.back() - table.temperatures.front()) /
                     (table.temperatures.size() - 1.0);
    const double curv =
        (loglik(res.T_est + h) - 2.0 * loglik(res.T_est) + loglik(res.T_est - h)) / (h * h);
    res.stderr_estimate = curv < 0.0 ? 1.0 / std::sqrt(-curv)
                                     : std::numeric_limits<double>::infinity();
    return res;
}

inline EstimationResult mle_temperature(const RamseyRecord& record, channel::Channel& ch,
                                        double T_lo, double T_hi, int nodes = 201) {
    const LikelihoodTable tab = LikelihoodTable::build(ch, record.config.theta,
                                                       record.config.readout_time, T_lo,
                                                       T_hi, nodes);
    return mle_temperature(record.empirical_mean, record.config.shots, tab);
}

struct BenchmarkRow {
    double theta = 0.0;
    int shots = 0;
    double var_Test = 0.0; // empirical Delta T^2; inf when the direction is blind
    double inv_NFT = 0.0;  // 1 / (N F_T(theta)); inf when F_T = 0
    double inv_NFQ = 0.0;  // 1 / (N F_Q)
    int n_replicas = 0;
    std::uint64_t seed = 0;
    bool degenerate = false;
};

// theta-scan of the empirical estimator error against the two-tier
// Cramer-Rao bound. Replicas use derived seeds (seed + replica index).
inline std::vector<BenchmarkRow> estimator_benchmark(
    const std::vector<double>& thetas, int shots, double truth_temperature,
    channel::Channel& ch, double readout_time, double T_lo, double T_hi, int replicas,
    std::uint64_t seed, double deltaT_rel = 1e-2) {
    ch.prepare(truth_temperature);
    const double dT = deltaT_rel * truth_temperature;
    const complex<double> v0 = ch.value(truth_temperature, readout_time);
    const complex<double> vp = ch.value(truth_temperature + dT, readout_time);
    const complex<double> vm = ch.value(truth_temperature - dT, readout_time);
    const complex<double> dv = (vp - vm) / (2.0 * dT);

    // qubit QFI at the readout point from the same derivative data
    const double absv = std::abs(v0);
    const double dabs = (std::abs(vp) - std::abs(vm)) / (2.0 * dT);
    const double dphase = (std::arg(vp * std::conj(vm))) / (2.0 * dT);
    const auto q = metrology::qfi(absv, dabs, dphase);
    const double FQ = q.F_Q ? *q.F_Q : q.F_perp;

    std::vector<BenchmarkRow> rows;
    rows.reserve(thetas.size());
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        BenchmarkRow row;
        row.theta = thetas[k];
        row.shots = shots;
        row.n_replicas = replicas;
        row.seed = seed;
        row.inv_NFQ = 1.0 / (shots * FQ);

        double FT = 0.0;
        try {
            FT = metrology::fisher_of_equatorial_measurement(v0, dv, thetas[k]);
        } catch (const DegenerateOutcome&) {
            row.degenerate = true;
        }
        row.inv_NFT = FT > 0.0 ? 1.0 / (shots * FT)
                               : std::numeric_limits<double>::infinity();

        if (FT <= 1e-9 * FQ) { // blind direction: flag, do not estimate
            row.degenerate = true;
            row.var_Test = std::numeric_limits<double>::infinity();
            rows.push_back(row);
            continue;
        }

        const LikelihoodTable tab =
            LikelihoodTable::build(ch, thetas[k], readout_time, T_lo, T_hi);
        double sq = 0.0;
        int used = 0;
        for (int r = 0; r < replicas; ++r) {
            RamseyConfig cfg;
            cfg.theta = thetas[k];
            cfg.shots = shots;
            cfg.readout_time = readout_time;
            cfg.truth_temperature = truth_temperature;
            cfg.rng_seed = seed + static_cast<std::uint64_t>(r);
            const RamseyRecord rec = simulate(cfg, ch);
            try {
                const EstimationResult est =
                    mle_temperature(rec.empirical_mean, shots, tab);
                sq += (est.T_est - truth_temperature) * (est.T_est - truth_temperature);
                ++used;
            } catch (const BoundaryMaximum&) {
                row.degenerate = true; // bracket-edge replicas flagged, not fatal
            }
        }
        row.var_Test = used > 0 ? sq / used : std::numeric_limits<double>::infinity();
        rows.push_back(row);
    }
    return rows;
}

} // namespace fermiprobe::protocol
