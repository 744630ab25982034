// channel.hpp — uniform access to the decoherence channels: a channel yields
// v(t; T) as a full trace or a single value, recomputable at displaced
// temperatures for finite-difference derivatives.

#pragma once

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fermiprobe/levitov.hpp"
#include "fermiprobe/weakcoupling.hpp"

namespace fermiprobe::channel {

using levitov::DecoherenceTrace;
using std::complex;

class Channel {
  public:
    virtual ~Channel() = default;
    virtual std::string name() const = 0;
    // pin internal discretizations to the analysis temperature
    virtual void prepare(double temperature) {}
    virtual DecoherenceTrace trace(double temperature, const std::vector<double>& grid) = 0;
    virtual complex<double> value(double temperature, double t) = 0;
};

// Exact determinant channel. The basis and truncation are pinned at the
// prepare() temperature; occupations are re-solved per evaluation temperature
// so finite differences stay on one discretization.
class ExactChannel : public Channel {
  public:
    ExactChannel(basis::Geometry geometry, basis::CouplingSpec coupling,
                 double epsilon = 1e-4, int workers = 0, int harmonic_n_max = 0)
        : geometry_(geometry), coupling_(coupling), epsilon_(epsilon), workers_(workers),
          harmonic_n_max_(harmonic_n_max) {}

    explicit ExactChannel(levitov::ExactSystem sys, int workers = 0)
        : geometry_(sys.truncated_basis.geometry), coupling_(sys.truncated_basis.coupling),
          epsilon_(sys.truncated_basis.epsilon), workers_(workers), system_(std::move(sys)),
          pinned_temperature_(system_->thermal.temperature) {}

    std::string name() const override { return "exact"; }

    void prepare(double temperature) override {
        if (system_ && pinned_temperature_ == temperature) return;
        system_ = levitov::ExactSystem::prepare(geometry_, coupling_, temperature, epsilon_,
                                                0, harmonic_n_max_);
        pinned_temperature_ = temperature;
        thermal_cache_.clear();
    }

    DecoherenceTrace trace(double temperature, const std::vector<double>& grid) override {
        ensure(temperature);
        return levitov::decoherence_function(system_->truncated_basis, thermal(temperature),
                                             grid, workers_);
    }

    complex<double> value(double temperature, double t) override {
        ensure(temperature);
        return levitov::decoherence_value(system_->truncated_basis, thermal(temperature), t);
    }

    const levitov::ExactSystem& system() const {
        if (!system_) throw Error("ExactChannel: not prepared");
        return *system_;
    }

  private:
    void ensure(double temperature) {
        if (!system_) prepare(temperature);
    }
    const basis::ThermalState& thermal(double temperature) {
        std::lock_guard<std::mutex> lock(mutex_);
        const auto key = num::double_bits(temperature);
        auto it = thermal_cache_.find(key);
        if (it == thermal_cache_.end())
            it = thermal_cache_.emplace(key, system_->thermal_at(temperature)).first;
        return it->second;
    }

    basis::Geometry geometry_;
    basis::CouplingSpec coupling_;
    double epsilon_;
    int workers_;
    int harmonic_n_max_ = 0;
    std::optional<levitov::ExactSystem> system_;
    double pinned_temperature_ = -1.0;
    std::mutex mutex_;
    std::map<std::uint64_t, basis::ThermalState> thermal_cache_;
};

// Closed-form weak-coupling channel.
class WeakChannel : public Channel {
  public:
    WeakChannel(double kFa, double cutoff_Lambda = 1.0, bool include_phi = false)
        : kFa_(kFa), lambda_(cutoff_Lambda), include_phi_(include_phi) {}

    std::string name() const override { return "weak"; }

    DecoherenceTrace trace(double temperature, const std::vector<double>& grid) override {
        return weak::approx_decoherence(grid, model(temperature), include_phi_);
    }

    complex<double> value(double temperature, double t) override {
        return weak::approx_value(t, model(temperature), include_phi_);
    }

    const weak::WeakCouplingModel& model(double temperature) {
        std::lock_guard<std::mutex> lock(mutex_);
        const auto key = num::double_bits(temperature);
        auto it = cache_.find(key);
        if (it == cache_.end())
            it = cache_.emplace(key, weak::make_model(kFa_, temperature, lambda_)).first;
        return it->second;
    }

  private:
    double kFa_;
    double lambda_;
    bool include_phi_;
    std::mutex mutex_;
    std::map<std::uint64_t, weak::WeakCouplingModel> cache_;
};

} // namespace fermiprobe::channel
