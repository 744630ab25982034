// io.hpp — deterministic CSV export (fixed 12 significant digits)

#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "fermiprobe/levitov.hpp"
#include "fermiprobe/metrology.hpp"
#include "fermiprobe/protocol.hpp"
#include "fermiprobe/spectrum.hpp"

namespace fermiprobe::io {

inline std::string fmt12(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline void write_trace_csv(std::ostream& out, const levitov::DecoherenceTrace& tr) {
    out << "t_over_tauF,re_v,im_v,abs_v,phase\n";
    for (std::size_t i = 0; i < tr.size(); ++i)
        out << fmt12(tr.times[i]) << ',' << fmt12(tr.values[i].real()) << ','
            << fmt12(tr.values[i].imag()) << ',' << fmt12(tr.magnitude[i]) << ','
            << fmt12(tr.phase[i]) << '\n';
}

inline void write_spectrum_csv(std::ostream& out, const spectrum::Spectrum& sp) {
    out << "omega_tauF,A\n";
    for (std::size_t i = 0; i < sp.frequencies.size(); ++i)
        out << fmt12(sp.frequencies[i]) << ',' << fmt12(sp.values[i]) << '\n';
}

inline void write_metrology_csv(std::ostream& out, const metrology::MetrologyResult& r) {
    out << "t_over_tauF,abs_v,phase,F_par,F_perp,F_Q,QSNR\n";
    for (std::size_t i = 0; i < r.times.size(); ++i)
        out << fmt12(r.times[i]) << ',' << fmt12(r.abs_v[i]) << ',' << fmt12(r.phase[i])
            << ',' << fmt12(r.F_parallel[i]) << ',' << fmt12(r.F_perp[i]) << ','
            << fmt12(r.F_Q[i]) << ',' << fmt12(r.QSNR[i]) << '\n';
}

inline void write_benchmark_csv(std::ostream& out,
                                const std::vector<protocol::BenchmarkRow>& rows) {
    out << "theta,N,var_Test,inv_NFT,inv_NFQ,n_replicas,seed\n";
    for (const auto& r : rows)
        out << fmt12(r.theta) << ',' << r.shots << ',' << fmt12(r.var_Test) << ','
            << fmt12(r.inv_NFT) << ',' << fmt12(r.inv_NFQ) << ',' << r.n_replicas << ','
            << r.seed << '\n';
}

} // namespace fermiprobe::io
