#pragma once

// Binary state files, used to cache sampled ensembles.
//
// Layout (all little-endian):
//   char[8]  magic "MLEVQCST"
//   u32      format version (1)
//   u32      n_qubits
//   u32      ensemble kind (EnsembleKind value)
//   i32      D0 (0 when not applicable)
//   f64      transverse field (0 when not applicable)
//   u64      ensemble seed
//   u64      sample index
//   2^n records of (f64 re, f64 im)

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "mlevqc/ensembles.hpp"

namespace mlevqc {

static_assert(std::endian::native == std::endian::little, "state files assume a little-endian host");

inline constexpr char kStateMagic[8] = {'M', 'L', 'E', 'V', 'Q', 'C', 'S', 'T'};
inline constexpr std::uint32_t kStateFormatVersion = 1;

struct StateRecord {
    EnsembleSpec spec;
    std::uint64_t sample_index = 0;
    StateVector state{1};
};

namespace detail {

template <class T> void put(std::ostream &os, T v) {
    os.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <class T> T get(std::istream &is) {
    T v{};
    is.read(reinterpret_cast<char *>(&v), sizeof(T));
    if (!is) {
        throw std::runtime_error("truncated state file");
    }
    return v;
}

} // namespace detail

inline void write_state(std::ostream &os, const StateRecord &rec) {
    os.write(kStateMagic, sizeof kStateMagic);
    detail::put<std::uint32_t>(os, kStateFormatVersion);
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(rec.state.n_qubits()));
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(rec.spec.kind));
    detail::put<std::int32_t>(os, rec.spec.depth);
    detail::put<double>(os, rec.spec.field);
    detail::put<std::uint64_t>(os, rec.spec.seed);
    detail::put<std::uint64_t>(os, rec.sample_index);
    for (std::size_t j = 0; j < rec.state.dim(); ++j) {
        detail::put<double>(os, rec.state[j].real());
        detail::put<double>(os, rec.state[j].imag());
    }
    if (!os) {
        throw std::runtime_error("failed writing state file");
    }
}

inline StateRecord read_state(std::istream &is) {
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kStateMagic, sizeof magic) != 0) {
        throw std::runtime_error("not a state file (bad magic)");
    }
    if (const auto v = detail::get<std::uint32_t>(is); v != kStateFormatVersion) {
        throw std::runtime_error("unsupported state file version " + std::to_string(v));
    }
    StateRecord rec;
    const auto n = detail::get<std::uint32_t>(is);
    if (n < 1 || n > static_cast<std::uint32_t>(kMaxQubits)) {
        throw std::runtime_error("state file qubit count out of range");
    }
    const auto kind = detail::get<std::uint32_t>(is);
    if (kind > static_cast<std::uint32_t>(EnsembleKind::TFIMGround)) {
        throw std::runtime_error("state file has an unknown ensemble kind");
    }
    rec.spec.kind = static_cast<EnsembleKind>(kind);
    rec.spec.n_qubits = static_cast<int>(n);
    rec.spec.depth = detail::get<std::int32_t>(is);
    rec.spec.field = detail::get<double>(is);
    rec.spec.seed = detail::get<std::uint64_t>(is);
    rec.sample_index = detail::get<std::uint64_t>(is);
    Eigen::VectorXcd amps(Eigen::Index{1} << n);
    for (Eigen::Index j = 0; j < amps.size(); ++j) {
        const double re = detail::get<double>(is);
        const double im = detail::get<double>(is);
        amps[j] = cplx(re, im);
    }
    rec.state = StateVector::from_amplitudes(std::move(amps));
    return rec;
}

inline void save_state(const std::string &path, const StateRecord &rec) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    write_state(os, rec);
}

inline StateRecord load_state(const std::string &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open '" + path + "'");
    }
    return read_state(is);
}

/// Cache file name for one ensemble member, unique per (spec, index).
inline std::string state_cache_name(const EnsembleSpec &spec, std::uint64_t index) {
    std::ostringstream os;
    os << name(spec.kind) << "_n" << spec.n_qubits << "_d" << spec.depth << "_g" << spec.field
       << "_s" << spec.seed << "_i" << index << ".state";
    return os.str();
}

} // namespace mlevqc
