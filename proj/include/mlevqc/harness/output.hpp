#pragma once

// Result rows, RFC-4180 CSV output and the per-unit resume manifest.

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mlevqc/errors.hpp"

namespace mlevqc::harness {

inline const std::vector<std::string> kCsvColumns = {
    "experiment", "arch", "n", "D", "D_star", "d0_or_g", "seed",
    "samples",    "metric", "value", "std_err", "version"};

struct ResultRow {
    std::string experiment;
    std::string arch; ///< empty when not applicable
    int n = 0;
    std::optional<int> depth;
    std::optional<int> d_star;
    std::string d0_or_g;
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    std::string metric;
    double value = 0.0;
    std::optional<double> std_err;
};

/// Integers print plainly, other finite values in the shortest round-trip
/// "%g" form, non-finite values as "inf"/"-inf"/"nan".
inline std::string format_number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[32];
    if (v == std::trunc(v) && std::abs(v) < 1e15) {
        std::snprintf(buf, sizeof buf, "%.0f", v);
        return buf;
    }
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) {
            break;
        }
    }
    return buf;
}

inline std::string csv_field(const std::string &s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        out += c;
        if (c == '"') {
            out += '"';
        }
    }
    return out + "\"";
}

inline std::vector<std::string> row_fields(const ResultRow &r) {
    return {r.experiment,
            r.arch,
            std::to_string(r.n),
            r.depth ? std::to_string(*r.depth) : "",
            r.d_star ? std::to_string(*r.d_star) : "",
            r.d0_or_g,
            std::to_string(r.seed),
            std::to_string(r.samples),
            r.metric,
            format_number(r.value),
            r.std_err ? format_number(*r.std_err) : "",
            kVersion};
}

inline std::string csv_line(const std::vector<std::string> &fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        line += i ? "," : "";
        line += csv_field(fields[i]);
    }
    return line + "\r\n";
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// FNV-1a, used to tie a manifest to the config that produced it.
inline std::uint64_t fnv1a(const std::string &s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h = (h ^ c) * 0x100000001b3ULL;
    }
    return h;
}

/**
 * Writes the CSV and, when writing to a file, a manifest
 * `<output>.manifest.jsonl` with one line per completed unit. A rerun with
 * resume enabled replays the rows and payloads of units already present in
 * a manifest written by the same config, so an interrupted sweep continues
 * where it stopped and the final CSV is identical to an uninterrupted run.
 */
class ResultSink {
  public:
    ResultSink(const std::string &path, bool timestamp, std::uint64_t config_hash, bool resume)
        : path_{path}, hash_{config_hash} {
        if (path.empty()) {
            os_ = &std::cout;
        } else {
            if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty()) {
                std::filesystem::create_directories(parent);
            }
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
            if (!*file_) {
                throw std::runtime_error("cannot open output '" + path + "'");
            }
            os_ = file_.get();
            manifest_path_ = path + ".manifest.jsonl";
            if (resume) {
                load_manifest();
            }
            manifest_ = std::make_unique<std::ofstream>(manifest_path_, std::ios::binary | std::ios::trunc);
            for (const auto &[key, entry] : stored_) {
                *manifest_ << entry.dump() << '\n';
            }
            manifest_->flush();
        }
        if (timestamp) {
            *os_ << "# generated " << utc_timestamp() << "\r\n";
        }
        *os_ << csv_line(kCsvColumns);
        os_->flush();
    }

    /// Stored payload of a completed unit, if resuming.
    [[nodiscard]] const nlohmann::json *completed(const std::string &unit) const {
        const auto it = stored_.find(unit);
        return it == stored_.end() ? nullptr : &it->second;
    }

    /// Emits the rows of a unit replayed from the manifest.
    void replay(const std::string &unit) {
        const auto *entry = completed(unit);
        for (const auto &fields : entry->at("rows")) {
            *os_ << csv_line(fields.get<std::vector<std::string>>());
        }
        os_->flush();
        ++replayed_;
    }

    void complete(const std::string &unit, const std::vector<ResultRow> &rows,
                  nlohmann::json payload = nullptr) {
        nlohmann::json entry{{"config_hash", hash_}, {"unit", unit}, {"rows", nlohmann::json::array()}};
        for (const auto &r : rows) {
            const auto fields = row_fields(r);
            *os_ << csv_line(fields);
            entry["rows"].push_back(fields);
        }
        os_->flush();
        if (!payload.is_null()) {
            entry["payload"] = std::move(payload);
        }
        if (manifest_) {
            *manifest_ << entry.dump() << '\n';
            manifest_->flush();
        }
    }

    [[nodiscard]] std::size_t replayed() const { return replayed_; }

  private:
    void load_manifest() {
        std::ifstream in(manifest_path_);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) {
                continue;
            }
            nlohmann::json entry;
            try {
                entry = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error &) {
                break; // torn final line from an interrupted write
            }
            if (entry.value("config_hash", std::uint64_t{0}) != hash_) {
                stored_.clear();
                return;
            }
            auto unit = entry.at("unit").get<std::string>();
            stored_[unit] = std::move(entry);
        }
    }

    std::string path_;
    std::string manifest_path_;
    std::uint64_t hash_;
    std::unique_ptr<std::ofstream> file_;
    std::unique_ptr<std::ofstream> manifest_;
    std::ostream *os_ = nullptr;
    std::map<std::string, nlohmann::json> stored_;
    std::size_t replayed_ = 0;
};

} // namespace mlevqc::harness
